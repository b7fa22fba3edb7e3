"""Experiment configs: a small INI dialect parsed into typed blocks.

Format: ``key = value`` lines grouped under ``[section]`` headers, UTF-8,
``#`` starts a comment.  Recognized sections:

  [experiment]   kind (required), seed, output
  [parameters]   alpha, n, m, l, dealias, tol      -> Parameters
  [grid]         t_min, ratio, count, prepend      -> TimeGrid (optional)
  [study]        kind-specific knobs, see _STUDY_SCHEMA

Every key has a documented default except ``kind``; unknown sections or
keys are rejected so a typo cannot silently fall back to a default.
Validation collects every problem before raising, so one round trip
fixes a config instead of one error per attempt.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .operators import TimeGrid
from .params import Parameters

KINDS = (
    "solve",
    "kernel-check",
    "norm-equiv",
    "bilinear-check",
    "decay-study",
    "persistence-check",
    "analyticity-study",
    "combinatorial-check",
)

KIND_SUMMARIES = {
    "solve": "Picard iteration on seeded or analytic data; trace, norms, snapshots",
    "kernel-check": "kernel tables against decay bounds, symbol condition, convolution",
    "norm-equiv": "pairwise comparability of the critical size measures over a family",
    "bilinear-check": "operator constants of the quadratic term and the smallness margin",
    "decay-study": "weighted sup-norm decay slopes of derivatives against predictions",
    "persistence-check": "block norm of the evolved state against its initial size",
    "analyticity-study": "normalized derivative-growth sequence; flags rough data",
    "combinatorial-check": "exact enumeration of the binomial interaction sum",
}


class ConfigError(ValueError):
    """Carries the full list of validation problems."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


@dataclass
class ExperimentConfig:
    kind: str
    params: Parameters
    seed: int
    output: str
    grid: TimeGrid | None
    options: dict
    echo: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# value parsers


def _int(s):
    return int(s, 0)


def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("value must be finite")
    return v


_BOOL = {"true": True, "yes": True, "on": True, "1": True,
         "false": False, "no": False, "off": False, "0": False}


def _bool(s):
    try:
        return _BOOL[s.lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got '{s}'") from None


def _split(s):
    items = [x.strip() for x in s.split(",")]
    items = [x for x in items if x]
    if not items:
        raise ValueError("expected at least one comma-separated value")
    return items


def _floats(s):
    return tuple(_float(x) for x in _split(s))


def _ints(s):
    return tuple(_int(x) for x in _split(s))


def _str(s):
    return s


def _strs(s):
    return tuple(_split(s))


# ---------------------------------------------------------------------------
# schema: section -> key -> (parser, default)

_EXPERIMENT_SCHEMA = {
    "kind": (_str, None),
    "seed": (_int, 2026),
    "output": (_str, ""),
}

_PARAM_SCHEMA = {
    "alpha": (_float, 0.75),
    "n": (_int, 2),
    "m": (_int, 32),
    "l": (_float, 2.0 * math.pi),
    "dealias": (_float, 2.0 / 3.0),
    "tol": (_float, 1e-12),
}

_GRID_SCHEMA = {
    "t_min": (_float, 2.0**-10),
    "ratio": (_float, 2.0**0.125),
    "count": (_int, 89),
    "prepend": (_int, 8),
}

_DATA_KEYS = {
    "data": (_str, "taylor-green"),
    "amplitude": (_float, 1e-2),
    "band": (_floats, (1.0, 8.0)),
    "spectrum": (_float, 0.0),
}

_STUDY_SCHEMA = {
    "solve": {
        **_DATA_KEYS,
        "tol": (_float, 1e-8),
        "max_iter": (_int, 20),
        "k_trace": (_int, 1),
        "snapshots": (_int, 5),
    },
    "kernel-check": {
        "alphas": (_floats, (0.6, 0.75, 0.9)),
        "times": (_floats, (0.1, 1.0, 10.0)),
        "dims": (_ints, (1, 2, 3)),
        "grad_orders": (_ints, (0, 1)),
        "r_min": (_float, 1e-2),
        "r_max": (_float, 1e3),
        "per_decade": (_int, 60),
        "mihlin": (_bool, True),
        "convolution": (_bool, True),
    },
    "norm-equiv": {
        "count": (_int, 20),
        "factor": (_float, 50.0),
        "pointwise": (_bool, True),
        "pointwise_count": (_int, 6),
    },
    "bilinear-check": {
        "pairs": (_int, 10),
        "amplitude": (_float, 1.0),
        "drift_tol": (_float, 0.1),
    },
    "decay-study": {
        "alphas": (_floats, (0.75,)),
        "k_fit": (_int, 2),
        "k_bound": (_int, 4),
        "window_frac": (_float, 0.25),
        "slope_tol": (_float, 0.05),
    },
    "persistence-check": {
        **_DATA_KEYS,
        "t0": (_floats, (0.1, 1.0, 10.0)),
        "tol": (_float, 1e-8),
        "max_iter": (_int, 20),
    },
    "analyticity-study": {
        "cases": (_strs, ("solution", "gevrey")),
        "k_max": (_int, 8),
        "slack": (_float, 0.2),
        "amplitude": (_float, 1e-2),
        "spike": (_float, 1e-3),
        "rate": (_float, 1.0),
    },
    "combinatorial-check": {
        "delta": (_float, 1.0),
        "max_degree": (_int, 20),
        "dims": (_ints, (1, 2, 3)),
    },
}

_DATA_CHOICES = ("taylor-green", "random", "zero")
_CASE_CHOICES = ("solution", "gevrey", "edge-spike", "white")


# ---------------------------------------------------------------------------
# parsing


def _scan(text, errors):
    """Raw scan: (section, key) -> (value, line) plus duplicate detection."""
    entries = {}
    seen_sections = set()
    section = None
    for num, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"line {num}: malformed section header '{raw.strip()}'")
                continue
            section = line[1:-1].strip().lower()
            if section not in ("experiment", "parameters", "grid", "study"):
                errors.append(f"line {num}: unknown section [{section}]")
                section = None
            elif section in seen_sections:
                errors.append(f"line {num}: section [{section}] given twice")
            seen_sections.add(section)
            continue
        if "=" not in line:
            errors.append(f"line {num}: expected 'key = value', got '{line}'")
            continue
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        if section is None:
            errors.append(f"line {num}: key '{key}' outside any [section]")
            continue
        if not key:
            errors.append(f"line {num}: empty key")
            continue
        if (section, key) in entries:
            first = entries[(section, key)][1]
            errors.append(
                f"line {num}: duplicate key '{key}' in [{section}] "
                f"(first given on line {first})"
            )
            continue
        entries[(section, key)] = (value, num)
    return entries


def _resolve(entries, section, schema, errors, context=""):
    """Typed values for one section, defaults filled, unknown keys flagged."""
    out = {}
    for (sec, key), (value, num) in entries.items():
        if sec != section:
            continue
        if key not in schema:
            where = context or f"[{section}]"
            errors.append(f"line {num}: unknown key '{key}' in {where}")
            continue
        parser = schema[key][0]
        try:
            out[key] = parser(value)
        except ValueError as e:
            errors.append(f"line {num}: key '{key}': {e}")
    for key, (_, default) in schema.items():
        out.setdefault(key, default)
    return out


def _line_of(entries, section, key):
    got = entries.get((section, key))
    return got[1] if got else None


def parse_config(text) -> ExperimentConfig:
    """Validate a config; raises ConfigError listing *all* problems."""
    errors = []
    entries = _scan(text, errors)

    exp = _resolve(entries, "experiment", _EXPERIMENT_SCHEMA, errors)
    kind = exp["kind"]
    if kind is None:
        errors.append("missing required key 'kind' in [experiment]")
    elif kind not in KINDS:
        num = _line_of(entries, "experiment", "kind")
        errors.append(
            f"line {num}: unknown kind '{kind}' (choices: {', '.join(KINDS)})"
        )
        kind = None

    par = _resolve(entries, "parameters", _PARAM_SCHEMA, errors)
    alpha = par["alpha"]
    alpha_ok = isinstance(alpha, float) and 0.5 < alpha < 1.0
    if isinstance(alpha, float) and not alpha_ok:
        num = _line_of(entries, "parameters", "alpha")
        at = f"line {num}: " if num else ""
        errors.append(
            f"{at}alpha = {alpha:g} outside the admissible interval (0.5, 1.0)"
        )

    # build with a placeholder alpha when it is out of range, so problems
    # with the other parameters are still reported in the same pass
    params = None
    try:
        params = Parameters(alpha=alpha if alpha_ok else 0.75,
                            n=par["n"], M=par["m"], L=par["l"],
                            dealias_frac=par["dealias"], tol=par["tol"])
    except (ValueError, TypeError) as e:
        errors.append(f"in [parameters]: {e}")
    if not alpha_ok:
        params = None

    grid = None
    if any(sec == "grid" for sec, _ in entries):
        g = _resolve(entries, "grid", _GRID_SCHEMA, errors)
        try:
            grid = TimeGrid(g["t_min"], g["ratio"], g["count"], g["prepend"])
        except (ValueError, TypeError) as e:
            errors.append(f"in [grid]: {e}")

    if kind is not None:
        options = _resolve(entries, "study", _STUDY_SCHEMA[kind], errors,
                           context=f"[study] for kind '{kind}'")
    else:
        options = {}
        for (sec, key), (_, num) in entries.items():
            if sec == "study":
                errors.append(
                    f"line {num}: cannot check [study] key '{key}' "
                    "without a recognized kind"
                )

    _cross_checks(kind, par, options, entries, errors)

    if errors:
        raise ConfigError(errors)

    echo = {}
    for (sec, key), (value, _) in sorted(entries.items(), key=lambda kv: kv[1][1]):
        echo.setdefault(sec, {})[key] = value
    return ExperimentConfig(kind=kind, params=params, seed=exp["seed"],
                            output=exp["output"], grid=grid,
                            options=options, echo=echo)


def _cross_checks(kind, par, options, entries, errors):
    if "data" in options and options["data"] not in _DATA_CHOICES:
        num = _line_of(entries, "study", "data")
        errors.append(
            f"line {num}: unknown data '{options['data']}' "
            f"(choices: {', '.join(_DATA_CHOICES)})"
        )
    elif options.get("data") == "taylor-green" and par.get("n") != 2:
        errors.append("taylor-green data needs n = 2")
    for case in options.get("cases", ()):
        if case not in _CASE_CHOICES:
            num = _line_of(entries, "study", "cases")
            errors.append(
                f"line {num}: unknown case '{case}' "
                f"(choices: {', '.join(_CASE_CHOICES)})"
            )
    if kind == "norm-equiv" and isinstance(par.get("m"), int) and par["m"] < 64:
        errors.append(
            f"norm-equiv needs m >= 64 to resolve the band family "
            f"(got m = {par['m']})"
        )
    if kind == "decay-study" and par.get("n") != 2:
        errors.append("decay-study uses a planar shear comb; set n = 2")
    if kind == "bilinear-check" and isinstance(options.get("pairs"), int) \
            and options["pairs"] < 10:
        errors.append(
            f"bilinear-check needs at least 10 pairs (got {options['pairs']})"
        )


def parse_config_file(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
