#!/usr/bin/env python3
"""
Utilities module for censreg
Contains helper functions shared by the estimators, the harness and the CLI
"""

import json
import logging
import math

import numpy as np

RNG_ALGORITHM = "numpy Philox4x64-10 keyed by SeedSequence(seed, stream, purpose)"

# Stream purposes for make_rng; keep the numbers stable, results depend on them
PURPOSE_DATA = 0
PURPOSE_CANDIDATES = 1
PURPOSE_GENERAL_POSITION = 2
PURPOSE_Q_SAMPLING = 3


def make_rng(seed, *keys):
    """Counter-based generator for the stream (seed, *keys); identical across platforms"""
    entropy = [int(seed) & 0xFFFFFFFFFFFFFFFF] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def weighted_lower_quantile(values, weights, alpha):
    """Smallest value v with sum(weights[values <= v]) >= alpha (weights summing to 1)"""
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    order = np.argsort(values, kind="mergesort")
    cum = np.cumsum(weights[order])
    # guard the last step against round-off in the total mass
    idx = int(np.searchsorted(cum, alpha - 1e-12, side="left"))
    idx = min(idx, len(values) - 1)
    return float(values[order][idx])


def mad(values):
    """Median absolute deviation about the median (not rescaled)"""
    values = np.asarray(values, dtype=float)
    return float(np.median(np.abs(values - np.median(values))))


def parse_name_list(text):
    """Split a comma separated CLI value into clean names"""
    if text is None:
        return []
    return [part.strip() for part in str(text).split(",") if part.strip()]


def parse_index_list(text):
    """Comma separated integers, e.g. '3,17'"""
    try:
        return [int(part) for part in parse_name_list(text)]
    except ValueError as e:
        logging.error(f"Error parsing index list '{text}': {e}")
        raise


def to_jsonable(obj):
    """Convert numpy containers and scalars to plain Python for json.dumps"""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        value = float(obj)
        if math.isnan(value) or math.isinf(value):
            return None
        return value
    return obj


def dumps(obj):
    """JSON text in insertion order, non-finite floats as null"""
    return json.dumps(to_jsonable(obj))
