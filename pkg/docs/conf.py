#!/usr/bin/env python
# -*- coding: utf-8 -*-

# Sphinx configuration for the drape documentation.

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import drape  # noqa: E402

project = "drape"
copyright = "2026, The drape developers"
version = release = drape.__version__

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.viewcode",
    "sphinx.ext.mathjax",
    "sphinx.ext.napoleon",
]
napoleon_numpy_docstring = True
autodoc_member_order = "bysource"

source_suffix = ".rst"
master_doc = "index"
exclude_patterns = ["_build"]
pygments_style = "sphinx"

html_theme = "sphinx_rtd_theme"
htmlhelp_basename = "drapedoc"
