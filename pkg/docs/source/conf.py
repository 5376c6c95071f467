# Configuration file for the Sphinx documentation builder.

import sys
sys.path.append("../..")

project = 'flist'
copyright = '2026, flist developers'
author = 'flist developers'
release = '0.1.0'

extensions = ['sphinx.ext.autodoc']

html_theme = 'alabaster'
