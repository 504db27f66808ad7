"""JSON-friendly dictionaries for every result the tool can report.

These builders produce plain dicts of primitives (floats kept finite,
infinities spelled as strings, probabilities as exact repr text) so that
`json.dumps(..., sort_keys=True)` yields byte-identical reports for
identical inputs. The service returns these payloads directly and the
command line wraps them in its report envelope.
"""

from __future__ import annotations

import math

from .consistency import ConsistencyVerdict, SearchResult
from .distributions import Distribution, distribution_to_dict, space_to_dict
from .inference import MapResult, MarginalResult, scores_to_dict
from .losses import ZeroOneRisk
from .reproduce import TargetResult
from .structures import OutputSpace, OutputVector, part_of_index


def json_float(x) -> float | str | None:
    """Floats for JSON: finite values pass through, infinities become text."""
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    if x == math.inf:
        return "inf"
    if x == -math.inf:
        return "-inf"
    return "nan"


def output_to_dict(y: OutputVector) -> dict:
    return {"parts": [list(p) for p in y.part_ids()]}


def _maybe_output(y: OutputVector | None) -> dict | None:
    return None if y is None else output_to_dict(y)


def zero_one_to_dict(z: ZeroOneRisk | None) -> dict | None:
    if z is None:
        return None
    return {
        "value": json_float(z.value),
        "bayes": json_float(z.bayes),
        "is_optimal": z.is_optimal,
    }


def verdict_to_dict(v: ConsistencyVerdict) -> dict:
    minimizer = None
    if v.minimizer is not None:
        minimizer = scores_to_dict(v.space, v.minimizer)["scores"]
    witness = None
    if v.witness_mode is not None:
        witness = {
            "mode": output_to_dict(v.witness_mode),
            "other": output_to_dict(v.witness_other),
        }
    return {
        "status": v.status,
        "loss": v.kind.value,
        "space": space_to_dict(v.space),
        "minimizer": minimizer,
        "minimizer_source": v.minimizer_source,
        "flags": {"empirical": v.empirical, "realizable": v.realizable},
        "modes": [output_to_dict(y) for y in v.modes],
        "witness": witness,
        "gap": json_float(v.gap),
        "map_output": _maybe_output(v.map_output),
        "zero_one": zero_one_to_dict(v.zero_one),
        "nll_residual": json_float(v.nll_residual),
        "reason": v.reason,
    }


def map_result_to_dict(space: OutputSpace, r: MapResult, algorithm: str) -> dict:
    return {
        "mode": "map",
        "space": space_to_dict(space),
        "algorithm": algorithm,
        "output": output_to_dict(r.output),
        "score": json_float(r.score),
    }


def marginal_result_to_dict(space: OutputSpace, r: MarginalResult, algorithm: str) -> dict:
    entries = []
    for i, v in enumerate(r.marginals):
        entries.append({
            "part": list(part_of_index(space, i)),
            "value": json_float(float(v)),
        })
    return {
        "mode": "marginal",
        "space": space_to_dict(space),
        "algorithm": algorithm,
        "marginals": entries,
        "log_partition": json_float(r.log_partition),
    }


def search_result_to_dict(result: SearchResult, tie_tolerance: float) -> dict:
    return {
        "loss": result.kind.value,
        "space": space_to_dict(result.space),
        "trials": result.trials,
        "seed": result.seed,
        "alpha": json_float(result.alpha),
        "tie_tolerance": json_float(tie_tolerance),
        "found": len(result.counterexamples),
        "counterexamples": [
            {
                "trial": c.trial,
                "distribution": distribution_to_dict(c.dist),
                "verdict": verdict_to_dict(c.verdict),
            }
            for c in result.counterexamples
        ],
    }


def reproduce_results_to_dict(results: list[TargetResult]) -> dict:
    return {
        "ok": all(t.ok for t in results),
        "targets": [
            {
                "target": t.target,
                "ok": t.ok,
                "checks": [
                    {
                        "name": c.name,
                        "expected": c.expected,
                        "computed": c.computed,
                        "ok": c.ok,
                        "informational": c.informational,
                    }
                    for c in t.checks
                ],
            }
            for t in results
        ],
    }


def enumeration_to_dict(space: OutputSpace, outputs) -> dict:
    return {
        "space": space_to_dict(space),
        "count": len(outputs),
        "outputs": [output_to_dict(y) for y in outputs],
    }


def distribution_payload(dist: Distribution) -> dict:
    return distribution_to_dict(dist)
