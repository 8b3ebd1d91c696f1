"""Metric fields: expression language, Wirtinger jets and the built-in catalog."""

from rcpos.dsl.catalog import CATALOG, catalog, describe_catalog, resolve_metric
from rcpos.dsl.expr import Expr, WirtingerJet, evaluate, jet, to_source
from rcpos.dsl.metric import (
    Domain,
    MetricField,
    MetricJet,
    build_metric,
    eval_jet,
    fd_jet,
    jet_fd_discrepancy,
    load_metric,
    parse_metric,
)
from rcpos.dsl.parser import parse_expression

__all__ = [
    "CATALOG",
    "Domain",
    "Expr",
    "MetricField",
    "MetricJet",
    "WirtingerJet",
    "build_metric",
    "catalog",
    "describe_catalog",
    "eval_jet",
    "evaluate",
    "fd_jet",
    "jet",
    "jet_fd_discrepancy",
    "load_metric",
    "parse_expression",
    "parse_metric",
    "resolve_metric",
    "to_source",
]
