# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the run configuration

A run is described by one JSON (or YAML) document. Sections missing from the
document take their defaults; model and initial data sections are replaced as
a whole because their admissible keys depend on the preset. Every key is
checked against the schema, errors name the dotted key path and the source
line.
"""

import copy
import math

import yaml

from kfield.core.initial_data import IC_DEFAULTS, IC_PRESETS, make_initial_data
from kfield.core.integrator import DEFAULT_LEVELS, BoundaryCondition, GridSpec, SchemeConfig
from kfield.core.lagrangian import PRESETS, make_model
from kfield.core.fieldeq import RESIDUAL_KINDS


class ConfigError(ValueError):
    """Malformed configuration, carries the dotted key path and the source line when known."""

    def __init__(self, path, message, line=None):
        self.path = path
        self.line = line
        where = path or '<document>'
        if line is not None:
            where = '{} (line {})'.format(where, line)
        super(ConfigError, self).__init__('{}: {}'.format(where, message))


DEFAULTS = {
    'model': {'preset': 'wave', 'c': 1.0},
    'grid': {'nt': 201, 'nx': 101, 't_end': 2*math.pi, 'x_min': 0.0, 'x_max': 2*math.pi},
    'bc': 'periodic',
    'ic': {'preset': 'standing_mode'},
    'variation': None,
    'scheme': {'cell_rule': 'averaged_corner', 'force_quadrature': 'centered',
               'newton': {'tol': 1e-12, 'max_iter': 50}},
    'output': {'path': None, 'every': 1},
    'seed': 0,
    'derive': {'point': ''},
    'residual': {'kind': 'el', 'points': [[0.0, 0.5], [0.3, 1.0], [1.0, 2.0]]},
    'convergence': {'levels': [list(level) for level in DEFAULT_LEVELS]},
}

# sections replaced rather than merged
WHOLE = ('model', 'ic', 'variation')

IC_SCHEMA = dict([('preset', 'str')] + [(key, 'float') for key in sorted(IC_DEFAULTS)])

SCHEMA = {
    'grid': {'nt': 'int', 'nx': 'int', 't_end': 'float', 'x_min': 'float', 'x_max': 'float'},
    'bc': 'str',
    'ic': IC_SCHEMA,
    'variation': IC_SCHEMA,
    'scheme': {'cell_rule': 'str', 'force_quadrature': 'str', 'newton': {'tol': 'float', 'max_iter': 'int'}},
    'output': {'path': 'path', 'every': 'int'},
    'seed': 'int',
    'derive': {'point': 'str'},
    'residual': {'kind': 'str', 'points': 'points'},
    'convergence': {'levels': 'levels'},
}


def _line_index(text):
    """Maps dotted key paths to 1-based source lines."""
    lines = {}
    try:
        root = yaml.compose(text)
    except yaml.YAMLError:
        return lines

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                child = '{}.{}'.format(path, key.value) if path else str(key.value)
                lines[child] = key.start_mark.line + 1
                walk(value, child)
    walk(root, '')
    return lines


def _number(value, path, kind, lines):
    if isinstance(value, bool):
        raise ConfigError(path, 'expected a number, got {!r}'.format(value), lines.get(path))
    if isinstance(value, str):
        # YAML 1.1 reads forms such as 1e-12 as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(path, 'expected a number, got {!r}'.format(value), lines.get(path))
    if not isinstance(value, (int, float)):
        raise ConfigError(path, 'expected a number, got {!r}'.format(value), lines.get(path))
    if not math.isfinite(value):
        raise ConfigError(path, 'expected a finite number, got {!r}'.format(value), lines.get(path))
    if kind == 'int':
        if int(value) != value:
            raise ConfigError(path, 'expected an integer, got {!r}'.format(value), lines.get(path))
        return int(value)
    return float(value)


def _check(value, schema, path, lines):
    if isinstance(schema, dict):
        if not isinstance(value, dict):
            raise ConfigError(path, 'expected a mapping, got {!r}'.format(value), lines.get(path))
        out = {}
        for key, item in value.items():
            child = '{}.{}'.format(path, key) if path else str(key)
            if key not in schema:
                raise ConfigError(child, 'unknown key, expected one of {}'.format(', '.join(sorted(schema))),
                                  lines.get(child))
            out[key] = _check(item, schema[key], child, lines)
        return out
    if schema in ('int', 'float'):
        return _number(value, path, schema, lines)
    if schema == 'str':
        if not isinstance(value, str):
            raise ConfigError(path, 'expected a string, got {!r}'.format(value), lines.get(path))
        return value
    if schema == 'path':
        if value is not None and not isinstance(value, str):
            raise ConfigError(path, 'expected a file path or null, got {!r}'.format(value), lines.get(path))
        return value
    if schema in ('points', 'levels'):
        kind = 'float' if schema == 'points' else 'int'
        if not isinstance(value, list) or not value:
            raise ConfigError(path, 'expected a non empty list of pairs', lines.get(path))
        out = []
        for index, pair in enumerate(value):
            child = '{}[{}]'.format(path, index)
            if not isinstance(pair, list) or len(pair) != 2:
                raise ConfigError(child, 'expected a pair, got {!r}'.format(pair), lines.get(path))
            out.append([_number(entry, child, kind, lines) for entry in pair])
        return out
    raise ConfigError(path, 'no schema for this key', lines.get(path))


def _check_model(value, lines):
    if not isinstance(value, dict) or 'preset' not in value:
        raise ConfigError('model', 'expected a mapping with a preset', lines.get('model'))
    preset = value['preset']
    if preset not in PRESETS:
        raise ConfigError('model.preset', 'unknown preset {!r}, expected one of {}'.format(
            preset, ', '.join(sorted(PRESETS))), lines.get('model.preset'))
    defaults = PRESETS[preset][1]
    out = {'preset': preset}
    for key, item in value.items():
        if key == 'preset':
            continue
        path = 'model.' + key
        if key not in defaults:
            raise ConfigError(path, 'preset {} has no parameter {}, expected {}'.format(
                preset, key, ', '.join(sorted(defaults)) or 'none'), lines.get(path))
        number = _number(item, path, 'float', lines)
        if number <= 0.0:
            raise ConfigError(path, 'must be positive, got {}'.format(number), lines.get(path))
        out[key] = number
    return out


def _set_path(document, dotted, value):
    keys = dotted.split('.')
    node = document
    for key in keys[:-1]:
        if node.get(key) is None:
            node[key] = {}
        node = node[key]
        if not isinstance(node, dict):
            raise ConfigError(dotted, 'cannot set a key below a scalar')
    node[keys[-1]] = value


class RunConfig(object):
    """
    Validated run configuration

    Data Members:
        sections (dict): merged and validated document, one entry per top-level key
        source (str or None): file the document was read from
    """

    def __init__(self, document=None, source=None, text=None):
        lines = _line_index(text) if text else {}
        if document is None:
            document = {}
        if not isinstance(document, dict):
            raise ConfigError('', 'the configuration must be a mapping')
        merged = copy.deepcopy(DEFAULTS)
        for key, value in document.items():
            if key not in DEFAULTS:
                raise ConfigError(str(key), 'unknown key, expected one of {}'.format(', '.join(sorted(DEFAULTS))),
                                  lines.get(str(key)))
            if key == 'model':
                # parameters without a preset refine the default model
                if isinstance(value, dict) and 'preset' not in value:
                    value = dict(merged['model'], **value)
                merged[key] = _check_model(value, lines)
            elif key in WHOLE:
                merged[key] = None if value is None else _check(value, SCHEMA[key], key, lines)
            else:
                checked = _check(value, SCHEMA[key], key, lines)
                merged[key] = _merge(merged[key], checked)
        for key in ('ic', 'variation'):
            if merged[key] is not None and merged[key].get('preset') not in IC_PRESETS:
                raise ConfigError(key + '.preset', 'expected one of {}'.format(', '.join(IC_PRESETS)),
                                  lines.get(key + '.preset'))
        if merged['residual']['kind'] not in RESIDUAL_KINDS:
            raise ConfigError('residual.kind', 'expected one of {}'.format(', '.join(RESIDUAL_KINDS)),
                              lines.get('residual.kind'))
        if merged['output']['every'] < 1:
            raise ConfigError('output.every', 'must be >= 1', lines.get('output.every'))
        self.sections = merged
        self.source = source
        self._lines = lines

    @classmethod
    def load(cls, path=None, overrides=()):
        """
        Reads a configuration file and applies --set overrides

            Args:
                path (str or None): JSON or YAML file, defaults only when None
                overrides (list(str)): 'dotted.path=value' items, values parsed as YAML scalars

            Returns:
                config (RunConfig)
        """
        text = None
        document = {}
        if path is not None:
            try:
                with open(path) as f:
                    text = f.read()
            except OSError as err:
                raise ConfigError('', 'cannot read {}: {}'.format(path, err))
            try:
                document = yaml.safe_load(text)
            except yaml.YAMLError as err:
                mark = getattr(err, 'problem_mark', None)
                raise ConfigError('', 'malformed document: {}'.format(getattr(err, 'problem', err)),
                                  mark.line + 1 if mark is not None else None)
            if document is None:
                document = {}
            if not isinstance(document, dict):
                raise ConfigError('', 'the configuration must be a mapping')
        for item in overrides:
            if '=' not in item:
                raise ConfigError(item, 'override must read path=value')
            dotted, raw = item.split('=', 1)
            try:
                value = yaml.safe_load(raw)
            except yaml.YAMLError:
                raise ConfigError(dotted, 'cannot parse override value {!r}'.format(raw))
            _set_path(document, dotted.strip(), value)
        return cls(document, source=path, text=text)

    def __getitem__(self, key):
        return self.sections[key]

    def _wrap(self, path, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ValueError as err:
            raise ConfigError(path, str(err), self._lines.get(path))

    def build_model(self):
        """(L, F) of the configured preset."""
        params = dict(self['model'])
        name = params.pop('preset')
        return self._wrap('model', make_model, name, **params)

    def build_grid(self):
        return self._wrap('grid', GridSpec, **self['grid'])

    def build_bc(self):
        return self._wrap('bc', BoundaryCondition, self['bc'])

    def build_scheme(self):
        scheme = self['scheme']
        return self._wrap('scheme', SchemeConfig, scheme['cell_rule'], scheme['force_quadrature'],
                          scheme['newton']['tol'], scheme['newton']['max_iter'])

    def build_initial_data(self, L, F, section='ic'):
        """Initial data of the ic section, or of the variation section with the damping sign reversed."""
        params = self[section]
        if params is None:
            raise ConfigError(section, 'section is required for this command', self._lines.get(section))
        params = dict(params)
        preset = params.pop('preset')
        return self._wrap(section, make_initial_data, L, F, preset, adjoint=section == 'variation', **params)

    def to_dict(self):
        return copy.deepcopy(self.sections)


def _merge(base, update):
    if not isinstance(base, dict) or not isinstance(update, dict):
        return update
    out = dict(base)
    for key, value in update.items():
        out[key] = _merge(base.get(key), value)
    return out
