# Configuration file for the Sphinx documentation builder.
#
# http://www.sphinx-doc.org/en/master/config

import os
import sys

sys.path.insert(0, os.path.abspath("../"))

from lbforge import __version__  # noqa: E402


# -- Project information -----------------------------------------------------

project = "lbforge"
copyright = "2026, lbforge contributors"
author = "lbforge contributors"

version = __version__
release = __version__


# -- General configuration ---------------------------------------------------

extensions = [
    "sphinx.ext.viewcode",
    "sphinx.ext.autodoc",
    "sphinx.ext.napoleon",
    "sphinx.ext.mathjax",
]

templates_path = ["_templates"]
source_suffix = ".rst"
master_doc = "index"
language = None
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]
pygments_style = None

autodoc_member_order = "bysource"


# -- Options for HTML output -------------------------------------------------

html_theme = "sphinx_rtd_theme"
html_static_path = []
htmlhelp_basename = "lbforgedoc"


# -- Options for manual page output ------------------------------------------

man_pages = [(master_doc, "lbforge", "lbforge Documentation", [author], 1)]
