"""
Tokenization, vocabularies, document-term matrices with prevalence covariates, and
lexical diversity over time periods.
"""
from ._tokenize import *
from ._periods import *
from ._vocabulary import *
from ._dtm import *
from ._diversity import *
