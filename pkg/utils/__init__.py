"""
Utils package for shared helpers.
"""
from utils.disjoint_set import DisjointSet
from utils.rational import DisplayRational, Rational, format_rational, parse_rational

__all__ = ['DisjointSet', 'DisplayRational', 'Rational', 'format_rational', 'parse_rational']
