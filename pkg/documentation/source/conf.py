"""Sphinx configuration for the tubekernel documentation."""

# pylint: disable=C0103,W0622

import os
import sys

sys.path.insert(0, os.path.abspath('../../'))

project = 'tubekernel: Szegő kernel singularities of polynomial tube domains'
copyright = '2023, the tubekernel developers'
author = 'the tubekernel developers'

extensions = ['sphinx.ext.autodoc',
              'sphinx.ext.intersphinx',
              'sphinx.ext.mathjax',
              'sphinx.ext.napoleon']

autodoc_typehints_format = 'fully-qualified'

autodoc_default_options = {
    'member-order': 'groupwise',
    'exclude-members': 'model_config, model_fields'
}

# Google-style docstrings only
napoleon_google_docstring = True
napoleon_numpy_docstring = False
napoleon_include_init_with_doc = True

exclude_patterns = ['build']

intersphinx_mapping = {
    'python': ('https://docs.python.org/3', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'pandas': ('https://pandas.pydata.org/docs/', None),
    'pydantic': ('https://docs.pydantic.dev/latest/', None),
    'click': ('https://click.palletsprojects.com/en/8.1.x/', None),
}

html_theme = 'sphinx_rtd_theme'
html_theme_options = {
    'navigation_depth': 4,
}
