from setuptools import setup

setup(name='kfield',
      version='0.1.0',
      author='The kfield authors',
      description='Lagrangian field theories on first jet bundles: geometry, variational prolongation, '
                  'forced fields and discrete variational integration',
      license='MIT',
      package_dir={'': 'field'},
      packages=['kfield', 'kfield.core'],
      package_data={'kfield': ['configs/*.json']},
      python_requires='>=3.8',
      install_requires=[
          'numba>=0.58.1',
          'numpy>=1.22.0',
          'PyYAML>=6.0.1',
          'scipy>=1.10.1',
      ],
      entry_points={
          'console_scripts': ['kfield = kfield.cli:main'],
      }
      )
