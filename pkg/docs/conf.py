# Configuration file for the Sphinx documentation builder.

# -- Path setup --------------------------------------------------------------

import os
import sys
import sphinx_rtd_theme

sys.path.insert(0, os.path.abspath('../field'))

source_suffix = '.rst'
source_encoding = 'utf-8-sig'

language = os.getenv('READTHEDOCS_LANGUAGE', 'en')
on_rtd = os.environ.get('READTHEDOCS', None) == 'True'

html_theme = 'sphinx_rtd_theme'
html_theme_options = {
    'logo_only': False,
    'collapse_navigation': False,
    'prev_next_buttons_location': 'bottom',
}

# -- Project information -----------------------------------------------------

project = 'kfield'
copyright = '2026, The kfield authors'
author = 'The kfield authors'

release = 'latest'
version = 'latest'

# -- General configuration ---------------------------------------------------

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.napoleon', 'sphinx_rtd_theme', 'sphinx.ext.autosectionlabel']

# numba compiles on import, the docs only need the signatures
autodoc_mock_imports = ['numba']
autodoc_member_order = 'bysource'
autosectionlabel_prefix_document = True

templates_path = ['_templates']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']
html_static_path = []
