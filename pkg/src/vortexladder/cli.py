"""Batch front end: JSON configs in, CSV/JSON artifacts out.

Every command reads one JSON config (--config), computes, and writes a
single output file atomically (write to a temp file in the target
directory, then rename), so a failed run never leaves a partial artifact.
Identical config + seed gives byte-identical output.  CSV floats carry 17
significant digits so doubles round-trip exactly.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from typing import Any, Mapping, Sequence

import numpy as np

from . import freefermion, gauge, perturbation, presets, rp, spin_ed
from .errors import ConfigError, ConvergenceError, GuardExceededError
from .lattice import Boundary, Ladder, ReflectionCase, build_ladder, reflection

_MISSING = object()


# ---------------------------------------------------------------------------
# config plumbing

class Conf:
    """Cursor into a JSON document whose errors name the failing path."""

    def __init__(self, doc: Any, path: str = "config"):
        self.doc = doc
        self.path = path

    def fail(self, msg: str) -> "ConfigError":
        return ConfigError(f"{self.path}: {msg}")

    def child(self, key: str) -> "Conf":
        if not isinstance(self.doc, dict):
            raise self.fail("expected an object")
        if key not in self.doc:
            raise ConfigError(f"{self.path}.{key}: missing required key")
        return Conf(self.doc[key], f"{self.path}.{key}")

    def has(self, key: str) -> bool:
        return isinstance(self.doc, dict) and key in self.doc

    def _typed(self, value: Any, kind: type, path: str) -> Any:
        if kind is float:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{path}: expected a number, got {value!r}")
            return float(value)
        if kind is int:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{path}: expected an integer, got {value!r}")
            return value
        if not isinstance(value, kind):
            raise ConfigError(f"{path}: expected {kind.__name__}, got {value!r}")
        return value

    def get(self, key: str, kind: type, default: Any = _MISSING) -> Any:
        if not isinstance(self.doc, dict):
            raise self.fail("expected an object")
        if key not in self.doc:
            if default is _MISSING:
                raise ConfigError(f"{self.path}.{key}: missing required key")
            return default
        return self._typed(self.doc[key], kind, f"{self.path}.{key}")

    def choice(self, key: str, options: Sequence[str], default: Any = _MISSING) -> str:
        val = self.get(key, str, default)
        if val not in options:
            raise ConfigError(f"{self.path}.{key}: must be one of {sorted(options)}, got {val!r}")
        return val

    def number_list(self, key: str, default: Any = _MISSING) -> list[float]:
        raw = self.get(key, list, default)
        out = []
        for i, v in enumerate(raw):
            out.append(self._typed(v, float, f"{self.path}.{key}[{i}]"))
        return out


def _load_config(path: str | None) -> Conf:
    if not path:
        raise ConfigError("--config is required")
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"config {path} is not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ConfigError("config: top level must be an object")
    return Conf(doc)


def _config_ladder(conf: Conf) -> Ladder:
    sub = conf.child("ladder")
    cells = sub.get("cells", int)
    boundary = sub.choice("boundary", [b.value for b in Boundary], Boundary.OPEN.value)
    try:
        return build_ladder(cells, boundary)
    except ValueError as e:
        raise ConfigError(f"{sub.path}: {e}") from e


def _parse_bond_key(text: str, path: str) -> tuple[int, int]:
    parts = text.split("-")
    try:
        i, j = (int(p) for p in parts)
    except ValueError:
        raise ConfigError(f'{path}: bond keys look like "1-2", got {text!r}') from None
    if i == j:
        raise ConfigError(f"{path}: bond {text!r} joins a site to itself")
    return (i, j) if i < j else (j, i)


def _bond_map(sub: Conf) -> dict[tuple[int, int], float]:
    if not isinstance(sub.doc, dict):
        raise sub.fail("expected an object of bond -> value")
    return {
        _parse_bond_key(k, f"{sub.path}.{k}"): sub.get(k, float) for k in sub.doc
    }


def _config_couplings(conf: Conf, ladder: Ladder) -> freefermion.CouplingConfig:
    sub = conf.child("couplings")
    if sub.has("preset"):
        name = sub.choice("preset", [p.value for p in presets.Preset])
        jx = sub.get("jx", float, 1.0)
        jy = sub.get("jy", float, 1.0)
        jz = sub.get("jz", float, 1.0)
        try:
            return presets.make_couplings(name, ladder, jx, jy, jz)
        except ValueError as e:
            raise ConfigError(f"{sub.path}: {e}") from e
    if sub.has("bonds"):
        couplings = freefermion.CouplingConfig(_bond_map(sub.child("bonds")))
        try:
            couplings.validate_for(ladder)
        except ValueError as e:
            raise ConfigError(f"{sub.path}.bonds: {e}") from e
        return couplings
    raise sub.fail('needs either "preset" or "bonds"')


def _resolve_seed(args, conf: Conf) -> int:
    if args.seed is not None:
        return args.seed
    if conf.has("seed"):
        return conf.get("seed", int)
    raise ConfigError("config.seed: a seed is required for randomized commands "
                      "(set it in the config or pass --seed)")


def _resolve_threads(args, conf: Conf) -> int:
    if args.threads is not None:
        n = args.threads
    elif conf.has("threads"):
        n = conf.get("threads", int)
    else:
        n = os.cpu_count() or 1
    if n < 1:
        raise ConfigError("threads must be >= 1")
    return n


# ---------------------------------------------------------------------------
# output plumbing

def _g17(x: float) -> str:
    return format(float(x), ".17g")


def _csv_text(header: Sequence[str], rows: Sequence[Sequence[str]],
              footer: Sequence[str] = ()) -> str:
    lines = [",".join(header)]
    lines.extend(",".join(row) for row in rows)
    lines.extend(footer)
    return "\n".join(lines) + "\n"


def _json_text(doc: Any) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def _emit(text: str, out_path: str | None) -> None:
    if not out_path:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(out_path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, out_path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# ---------------------------------------------------------------------------
# commands

def cmd_spectrum(conf: Conf, args) -> str:
    ladder = _config_ladder(conf)
    couplings = _config_couplings(conf, ladder)
    method = conf.choice("method", ["fermion", "spin-dense", "spin-iterative"])
    sector_doc: dict[str, int] | None = None

    if method == "fermion":
        if conf.has("sector"):
            pattern = conf.get("sector", str)
            try:
                sec = freefermion.pattern_sector(ladder, freefermion.parse_pattern(ladder, pattern))
            except ValueError as e:
                raise ConfigError(f"config.sector: {e}") from e
            g = gauge.gauge_for_sector(ladder, sec)
            modes = freefermion.mode_spectrum(freefermion.assemble_skew(ladder, couplings, g))
            values = freefermion.many_body_spectrum(modes)
            sector_doc = {k: int(v) for k, v in sec.values.items()}
        else:
            values = freefermion.sector_union_spectrum(ladder, couplings)
    elif method == "spin-dense":
        h = spin_ed.build_spin_hamiltonian(ladder, couplings)
        values = spin_ed.dense_spectrum(h).eigenvalues
    else:
        seed = _resolve_seed(args, conf)
        k = conf.get("k", int)
        h = spin_ed.build_spin_hamiltonian(ladder, couplings)
        values = spin_ed.lowest_eigenvalues(h, k=k, seed=seed).eigenvalues

    if args.format == "json":
        return _json_text({
            "method": method,
            "eigenvalues": [float(v) for v in values],
            "sector": sector_doc,
        })
    return _csv_text(["eigenvalue"], [[_g17(v)] for v in values])


def _symmetric_cases(ladder: Ladder, couplings: freefermion.CouplingConfig) -> list[str]:
    """Reflection cases under which |J| is mirror-symmetric."""
    candidates = [ReflectionCase.HORIZONTAL]
    if ladder.boundary is Boundary.OPEN:
        candidates.append(ReflectionCase.VERTICAL_OPEN)
    elif ladder.n_cells % 2 == 0:
        candidates.append(ReflectionCase.VERTICAL_CLOSED)
    holds = []
    for case in candidates:
        refl = reflection(ladder, case)
        ok = True
        for (i, j), val in couplings.values.items():
            ti, tj = refl.theta[i], refl.theta[j]
            mirrored = couplings[(ti, tj) if ti < tj else (tj, ti)]
            if abs(abs(val) - abs(mirrored)) > 1e-12 * max(1.0, abs(val)):
                ok = False
                break
        if ok:
            holds.append(case.value)
    return holds


def cmd_sweep(conf: Conf, args) -> str:
    ladder = _config_ladder(conf)
    couplings = _config_couplings(conf, ladder)
    threads = _resolve_threads(args, conf)
    result = freefermion.sector_sweep(ladder, couplings, threads=threads)
    e_min = result.argmin.energy
    tie_ids = [
        row.sector.sector_id
        for row in result.rows
        if abs(row.energy - e_min) <= 1e-12 * max(1.0, abs(e_min))
    ]
    cases = _symmetric_cases(ladder, couplings)
    names = list(ladder.cycle_names)

    if args.format == "json":
        return _json_text({
            "cycles": names,
            "rows": [
                {
                    "sector_id": row.sector.sector_id,
                    "values": {k: int(v) for k, v in row.sector.values.items()},
                    "ground_energy": row.energy,
                }
                for row in result.rows
            ],
            "argmin_sector": result.argmin.sector.sector_id,
            "tie_sector_ids": tie_ids,
            "reflection_symmetric_cases": cases,
        })

    header = ["sector_id", *names, "ground_energy", "is_argmin"]
    rows = [
        [
            str(row.sector.sector_id),
            *(str(row.sector.values[n]) for n in names),
            _g17(row.energy),
            "1" if row.sector.sector_id in tie_ids else "0",
        ]
        for row in result.rows
    ]
    footer = [
        f"# argmin_sector,{result.argmin.sector.sector_id}",
        f"# tie_count,{len(tie_ids)}",
        "# reflection_symmetric_cases," + "|".join(cases),
    ]
    return _csv_text(header, rows, footer)


def _bl_summary(cells: list[int], gaps: list[float]) -> dict:
    """Monotone-decay summary for the big-loop pattern."""
    decreasing = all(b < a for a, b in zip(gaps, gaps[1:]))
    doc: dict[str, Any] = {"strictly_decreasing": decreasing,
                           "log_slope": None, "log_r2": None}
    pos = [(n, g) for n, g in zip(cells, gaps) if g > 0]
    if len(pos) >= 3:
        xs = np.array([n for n, _ in pos], dtype=float)
        ys = np.log([g for _, g in pos])
        slope, intercept = np.polyfit(xs, ys, 1)
        fit = slope * xs + intercept
        ss_res = float(((ys - fit) ** 2).sum())
        ss_tot = float(((ys - ys.mean()) ** 2).sum())
        doc["log_slope"] = float(slope)
        doc["log_r2"] = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return doc


def cmd_gap_scan(conf: Conf, args) -> str:
    sub = conf.child("ladder")
    boundary = sub.choice("boundary", [b.value for b in Boundary], Boundary.OPEN.value)
    span = conf.number_list("cells_range")
    if len(span) != 2 or any(v != int(v) for v in span) or span[0] > span[1]:
        raise ConfigError("config.cells_range: expected [first, last] integers")
    cells = list(range(int(span[0]), int(span[1]) + 1, conf.get("cells_step", int, 1)))
    if not cells:
        raise ConfigError("config.cells_range: empty range")
    if cells[-1] > freefermion.MAX_SCAN_CELLS:
        raise GuardExceededError(
            f"{cells[-1]} cells exceeds the scan guard ({freefermion.MAX_SCAN_CELLS})"
        )
    patterns = conf.get("patterns", list, ["BL"])
    if not patterns or not all(isinstance(p, str) for p in patterns):
        raise ConfigError("config.patterns: expected a non-empty list of pattern strings")

    table: list[tuple[int, str, float]] = []
    by_pattern: dict[str, list[float]] = {p: [] for p in patterns}
    for n in cells:
        ladder = build_ladder(n, boundary)
        couplings = _config_couplings(conf, ladder)
        for pattern in patterns:
            try:
                report = freefermion.big_loop_gap(ladder, couplings, pattern)
            except ValueError as e:
                raise ConfigError(f"config.patterns: {pattern!r} at N={n}: {e}") from e
            table.append((n, pattern, report.gap))
            by_pattern[pattern].append(report.gap)

    summary = _bl_summary(cells, by_pattern["BL"]) if "BL" in by_pattern else None

    if args.format == "json":
        return _json_text({
            "boundary": boundary,
            "cells": cells,
            "rows": [{"cells": n, "pattern": p, "gap": g} for n, p, g in table],
            "bl_summary": summary,
        })
    footer = []
    if summary is not None:
        footer.append(f"# bl_strictly_decreasing,{str(summary['strictly_decreasing']).lower()}")
        if summary["log_slope"] is not None:
            footer.append(f"# bl_log_slope,{_g17(summary['log_slope'])}")
            footer.append(f"# bl_log_r2,{_g17(summary['log_r2'])}")
    rows = [[str(n), p, _g17(g)] for n, p, g in table]
    return _csv_text(["cells", "pattern", "gap"], rows, footer)


def cmd_compare(conf: Conf, args) -> str:
    ladder = _config_ladder(conf)
    couplings = _config_couplings(conf, ladder)
    tol = args.tolerance if args.tolerance is not None else conf.get("tol", float, 1e-8)
    doc: dict[str, Any] = {"boundary": ladder.boundary.value, "cells": ladder.n_cells,
                           "tol": tol}

    if ladder.n_sites <= spin_ed.MAX_DENSE_SPINS:
        h = spin_ed.build_spin_hamiltonian(ladder, couplings)
        spin = spin_ed.dense_spectrum(h).eigenvalues
        union = freefermion.sector_union_spectrum(ladder, couplings)
        comp = spin_ed.compare_spectra(spin, union, tol=tol)
        ground_delta = float(spin.min() - union.min())
        doc.update({
            "method": "dense",
            "comparison": comp.to_json_dict(),
            "spectra_equal": comp.equal,
            "ground_delta": ground_delta,
            "ground_equal": abs(ground_delta) <= tol,
        })
    else:
        seed = _resolve_seed(args, conf)
        h = spin_ed.build_spin_hamiltonian(ladder, couplings)
        spin_ground = float(spin_ed.lowest_eigenvalues(h, k=1, seed=seed).eigenvalues[0])
        sweep = freefermion.sector_sweep(ladder, couplings, threads=_resolve_threads(args, conf))
        ground_delta = spin_ground - sweep.argmin.energy
        doc.update({
            "method": "ground-only",
            "spin_ground": spin_ground,
            "fermion_ground": sweep.argmin.energy,
            "spectra_equal": None,
            "ground_delta": ground_delta,
            "ground_equal": abs(ground_delta) <= tol,
        })

    if args.format == "json":
        return _json_text(doc)
    keys = sorted(k for k in doc if not isinstance(doc[k], dict))
    rows = [[k, _g17(doc[k]) if isinstance(doc[k], float) else str(doc[k])] for k in keys]
    return _csv_text(["key", "value"], rows)


def _config_split(conf: Conf, ladder: Ladder) -> perturbation.PerturbationSplit:
    jx = conf.get("jx", float)
    guard = conf.get("ratio_guard", float, perturbation.RATIO_GUARD)
    try:
        if conf.has("t"):
            return perturbation.PerturbationSplit.from_uniform(
                ladder, jx, conf.get("t", float), ratio_guard=guard
            )
        jy_map: dict[tuple[int, int], float]
        if conf.has("jy_bonds") or conf.has("jz_bonds"):
            jy_map = _bond_map(conf.child("jy_bonds"))
            jz_map = _bond_map(conf.child("jz_bonds"))
        else:
            jy = conf.get("jy", float)
            jz = conf.get("jz", float)
            from .lattice import BondType

            jy_map = {b.pair: jy for b in ladder.bonds if b.kind is BondType.Y}
            jz_map = {b.pair: jz for b in ladder.bonds if b.kind is BondType.Z}
        split = perturbation.PerturbationSplit(jx, jy_map, jz_map, guard)
        split.validate_for(ladder)
        return split
    except GuardExceededError:
        raise
    except ValueError as e:
        raise ConfigError(f"config: {e}") from e


def cmd_perturb(conf: Conf, args) -> str:
    ladder = _config_ladder(conf)
    split = _config_split(conf, ladder)
    seed = _resolve_seed(args, conf)
    effective = perturbation.effective(ladder, split)
    validation = perturbation.validate_against_ed(ladder, split, seed=seed)
    scale = split.scale()
    rows_doc = [
        {
            "plaquette": r.plaquette,
            "delta_e_formula": r.delta_e_formula,
            "delta_e_exact": r.delta_e_exact,
            "abs_err": r.abs_err,
            "rel_err": r.rel_err,
            "scale": scale,
        }
        for r in validation.rows
    ]
    if args.format == "json":
        return _json_text({
            "boundary": ladder.boundary.value,
            "cells": ladder.n_cells,
            "e0_formula": effective.e0,
            "e2_formula": effective.e2,
            "e_free_exact": validation.e_free_exact,
            "rows": rows_doc,
        })
    rows = [
        [
            r.plaquette,
            "" if r.delta_e_formula is None else _g17(r.delta_e_formula),
            _g17(r.delta_e_exact),
            "" if r.abs_err is None else _g17(r.abs_err),
            "" if r.rel_err is None else _g17(r.rel_err),
            _g17(scale),
        ]
        for r in validation.rows
    ]
    return _csv_text(
        ["plaquette", "delta_e_formula", "delta_e_exact", "abs_err", "rel_err", "scale"],
        rows,
    )


def _rp_weights(conf: Conf, rng: np.random.Generator, n: int, mode: str, bulk: str):
    half = n // 2
    weights: dict[tuple[int, int], float] = {}
    for i in range(1, half + 1):
        for j in range(i + 1, half + 1):
            weights[(i, j)] = float(rng.uniform(-1, 1))
    if bulk == "symmetric":
        for (i, j), w in list(weights.items()):
            weights[(n + 1 - j, n + 1 - i)] = w
    else:
        for i in range(half + 1, n + 1):
            for j in range(i + 1, n + 1):
                weights[(i, j)] = float(rng.uniform(-1, 1))
    if conf.has("cross_weights"):
        cross = conf.number_list("cross_weights")
        if len(cross) != half:
            raise ConfigError(f"config.cross_weights: expected {half} values")
    else:
        cross = [float(rng.uniform(0.5, 1.5)) for _ in range(half)]
    if mode == "violate":
        cross[0] = -abs(cross[0])
    for i in range(1, half + 1):
        weights[(i, n + 1 - i)] = cross[i - 1]
    return weights


def cmd_rp_verify(conf: Conf, args) -> str:
    n = conf.get("majoranas", int, 8)
    samples = conf.get("samples", int, 200)
    betas = conf.number_list("betas", [0.5, 1.0, 2.0])
    max_degree = conf.get("max_degree", int, 4)
    mode = conf.choice("mode", ["verify", "violate"], "verify")
    bulk = conf.choice("bulk", ["symmetric", "asymmetric"], "symmetric")
    if n % 2 or n < 2 or n > rp.MAX_FOCK_MAJORANAS:
        raise ConfigError(f"config.majoranas: even count in 2..{rp.MAX_FOCK_MAJORANAS} required")
    if samples < 1:
        raise ConfigError("config.samples: must be >= 1")
    if not betas or any(b < 0 for b in betas):
        raise ConfigError("config.betas: non-empty, all >= 0")
    seed = _resolve_seed(args, conf)
    rng = np.random.default_rng(seed)
    theta = rp.mirror_theta(n)

    H = rp.quadratic(n, _rp_weights(conf, rng, n, mode, bulk))
    h_minus, h_zero, h_plus = rp.split_by_side(H)
    h1, h2 = rp.doubled_hamiltonians(h_minus, h_zero, h_plus, theta)

    target = H if bulk == "symmetric" else h1
    min_functional = None
    for _ in range(samples):
        B = rp.random_even_element(rng, n, max_degree=max_degree)
        for beta in betas:
            val = rp.rp_functional(B, target, theta, beta=beta)
            if min_functional is None or val < min_functional:
                min_functional = val

    trace_ok = True
    worst_margin = -float("inf")
    for beta in betas:
        report = rp.trace_bound_check(H, h1, h2, beta=beta)
        worst_margin = max(worst_margin, report.margin)
        trace_ok = trace_ok and report.holds
    energy = rp.energy_inequality_check(H, h1, h2)

    if mode == "verify":
        positive = min_functional >= -1e-10
        verdict = "pass" if (positive and trace_ok and energy.holds) else "fail"
    else:
        verdict = "pass" if min_functional < -1e-6 else "inconclusive"

    doc = {
        "samples": samples,
        "min_functional": min_functional,
        "trace_margin": worst_margin,
        "energy_gap": energy.gap,
        "verdict": verdict,
    }
    if args.format == "json":
        return _json_text(doc)
    rows = [[k, _g17(v) if isinstance(v, float) else str(v)] for k, v in sorted(doc.items())]
    return _csv_text(["key", "value"], rows)


# ---------------------------------------------------------------------------
# entry point

_COMMANDS = {
    "spectrum": (cmd_spectrum, "csv"),
    "sweep": (cmd_sweep, "csv"),
    "gap-scan": (cmd_gap_scan, "csv"),
    "compare": (cmd_compare, "json"),
    "perturb": (cmd_perturb, "json"),
    "rp-verify": (cmd_rp_verify, "json"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vortexladder",
        description="Spin-ladder toolkit: vortex sectors, spectra, gaps, "
                    "perturbative checks, reflection positivity.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=False, help="JSON config path")
        p.add_argument("--out", help="output path (stdout when omitted)")
        p.add_argument("--format", choices=["csv", "json"], default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument("--tolerance", type=float, default=None)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    runner, default_format = _COMMANDS[args.command]
    if args.format is None:
        args.format = default_format
    try:
        conf = _load_config(args.config)
        text = runner(conf, args)
        _emit(text, args.out)
        return 0
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except GuardExceededError as e:
        print(f"guard exceeded: {e}", file=sys.stderr)
        return 3
    except ConvergenceError as e:
        print(f"convergence failure: {e}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
