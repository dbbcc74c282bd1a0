"""
Rendering of tables as plain text and Markdown.
"""
from ._text import *
