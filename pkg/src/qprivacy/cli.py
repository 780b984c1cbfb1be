"""Command-line front end.

Exit codes: 0 success, 2 invalid input or parameters, 3 resource budget
exceeded, 4 numerical failure.
"""

from __future__ import annotations

import functools
import math
import sys
from pathlib import Path

import click

from . import __version__, experiments
from .core.classical import ProtocolError, protocol_to_json, send_input_protocol
from .core.matrix import CommMatrix, and_matrix, idmin_matrix
from .core.quantum import BudgetError
from .infotheory import NumericalError
from .io import InputFormatError, dumps, load_distribution, load_matrix, load_protocol, report_csv, rows_csv
from .privacy import privacy_report
from .protocols import and_protocol, idmin_leaky_uniform, idmin_private
from .structure import corners_check, decompose, tree_to_protocol, xor_decompose

EXIT_VALIDATION, EXIT_BUDGET, EXIT_NUMERICAL = 2, 3, 4


def _guard(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except BudgetError as exc:
            _fail(f"resource budget exceeded: {exc}", EXIT_BUDGET)
        except NumericalError as exc:
            _fail(f"numerical failure: {exc}", EXIT_NUMERICAL)
        except (InputFormatError, ProtocolError, ValueError, FileNotFoundError) as exc:
            if isinstance(exc, ValueError) and "non-finite" in str(exc):
                _fail(f"numerical failure: {exc}", EXIT_NUMERICAL)
            _fail(f"error: {exc}", EXIT_VALIDATION)

    return wrapper


def _fail(msg: str, code: int):
    click.echo(msg, err=True)
    sys.exit(code)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        click.echo(text, nl=False)


def _budget(qubits: int | None) -> int | None:
    if qubits is not None and qubits < 1:
        raise ValueError("--budget-qubits must be positive")
    return qubits


fmt_option = click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
out_option = click.option("--out", type=click.Path(dir_okay=False), default=None, help="Write here instead of stdout.")


@click.group()
@click.version_option(version=__version__, prog_name="qprivacy")
def main():
    """Privacy loss and leakage of two-party protocols."""


@main.command("analyze-matrix")
@click.option("--matrix", "matrix_path", required=True, type=click.Path(exists=True, dir_okay=False))
@fmt_option
@out_option
@_guard
def analyze_matrix(matrix_path, fmt, out):
    """Private-computability verdict, witnesses and a synthesized protocol."""
    m = load_matrix(matrix_path)
    tree, wit = decompose(m)
    report = {"matrix": m.name, "rows": m.rows, "cols": m.cols, "private": wit is None}
    report["verdict"] = "private" if wit is None else "not private"
    report["witness"] = None if wit is None else {"rows": list(wit.rows), "cols": list(wit.cols)}
    if set(m.alphabet) <= {0, 1}:
        c = corners_check(m)
        report["corners"] = None if c is None else {"rows": list(c.rows), "cols": list(c.cols)}
        xd = xor_decompose(m)
        report["xor_decomposition"] = None if xd is None else {"f_A": xd[0].tolist(), "f_B": xd[1].tolist()}
    if wit is None:
        p = tree_to_protocol(tree, m)
        report["protocol"] = protocol_to_json(p)
        report["rounds"] = p.max_rounds()
        report["communication_bits"] = p.max_bits()
    if fmt == "csv":
        cols = ["matrix", "rows", "cols", "verdict", "rounds", "communication_bits"]
        report.setdefault("rounds", 0)
        report.setdefault("communication_bits", 0)
        _emit(rows_csv(cols, [report]), out)
    else:
        _emit(dumps(report), out)


NAMED = ("and", "idmin-private", "idmin-leaky", "send-x")


def _named_protocol(name: str, n: int, delta: float) -> tuple[object, CommMatrix]:
    if name == "and":
        return and_protocol(delta), and_matrix()
    if name == "idmin-private":
        return idmin_private(n), idmin_matrix(n)
    if name == "idmin-leaky":
        return idmin_leaky_uniform(n, delta), idmin_matrix(n)
    size = 2**n
    m = CommMatrix.from_function(lambda x, y: 0, size, size, name="constant")
    return send_input_protocol(size, size, lambda x, y: 0, "A", name="send x"), m


@main.command()
@click.option("--protocol", "protocol", required=True,
              help=f"Protocol tree JSON file, or one of: {', '.join(NAMED)}.")
@click.option("--matrix", "matrix_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--dist", "dist_path", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--n", type=int, default=2, show_default=True)
@click.option("--delta", type=float, default=0.2, show_default=True)
@click.option("--budget-qubits", type=int, default=None)
@fmt_option
@out_option
@_guard
def privacy(protocol, matrix_path, dist_path, n, delta, budget_qubits, fmt, out):
    """Per-round privacy loss, leakage and expected leakage."""
    budget = _budget(budget_qubits)
    if Path(protocol).is_file():
        p = load_protocol(protocol)
        if matrix_path is None:
            raise ValueError("--matrix is required with a protocol file")
        m = load_matrix(matrix_path)
    elif protocol in NAMED:
        p, m = _named_protocol(protocol, n, delta)
        if matrix_path is not None:
            m = load_matrix(matrix_path)
    else:
        raise ValueError(f"{protocol!r} is neither a file nor one of {', '.join(NAMED)}")
    dim = getattr(p, "total_dim", None)
    if budget is not None and dim is not None and math.log2(dim) > budget:
        raise BudgetError(f"register needs {math.log2(dim):.3f} qubits, budget is {budget}")
    mu = load_distribution(dist_path, m)
    rep = privacy_report(p, mu, m, "uniform" if dist_path is None else Path(dist_path).name)
    if fmt == "csv":
        text = report_csv([rep])
        _emit(text, out)
        if out:
            Path(out).with_suffix(".json").write_text(dumps(_summary(rep)))
    else:
        _emit(dumps(rep.to_dict()), out)


def _summary(rep) -> dict:
    d = rep.to_dict()
    d.pop("per_round")
    return d


@main.group()
def paper():
    """Reference protocols with their error, communication and privacy figures."""


def _paper_emit(report: dict, fmt: str, out: str | None) -> None:
    if fmt == "csv":
        cols = [k for k, v in report.items() if not isinstance(v, (list, dict))]
        _emit(rows_csv(cols, [report]), out)
    else:
        _emit(dumps(report), out)


@paper.command("and")
@click.option("--delta", type=float, default=0.2, show_default=True)
@click.option("--budget-qubits", type=int, default=None)
@fmt_option
@out_option
@_guard
def paper_and(delta, budget_qubits, fmt, out):
    """Quantum AND with small leakage."""
    _paper_emit(experiments.and_summary(delta, _budget(budget_qubits)), fmt, out)


@paper.command("idmin-private")
@click.option("--n", type=click.IntRange(1, 4), default=2, show_default=True)
@fmt_option
@out_option
@_guard
def paper_idmin_private(n, fmt, out):
    """Zero-leakage identified minimum."""
    _paper_emit(experiments.idmin_private_summary(n), fmt, out)


@paper.command("idmin-leaky")
@click.option("--n", type=click.IntRange(1, 7), default=6, show_default=True)
@click.option("--delta", type=float, default=0.25, show_default=True)
@fmt_option
@out_option
@_guard
def paper_idmin_leaky(n, delta, fmt, out):
    """Identified minimum with geometric queries."""
    _paper_emit(experiments.idmin_leaky_summary(n, delta), fmt, out)


@paper.command("disj")
@click.option("--n", type=int, default=8, show_default=True)
@click.option("--stages", type=int, default=None, help="Truncate the default stage schedule.")
@click.option("--trials", type=int, default=None, help="Sample this many random pairs instead of all pairs.")
@click.option("--seed", type=int, default=None)
@click.option("--epsilon", type=float, default=1e-3, show_default=True, help="Non-orthogonalization distance.")
@click.option("--budget-qubits", type=int, default=None)
@fmt_option
@out_option
@_guard
def paper_disj(n, stages, trials, seed, epsilon, budget_qubits, fmt, out):
    """Grover-based disjointness."""
    _paper_emit(experiments.disj_summary(n, stages, trials, seed, _budget(budget_qubits), epsilon), fmt, out)


def _parse_grid(grid: str) -> tuple[str, list]:
    name, _, values = grid.partition("=")
    name = name.strip()
    if name not in ("delta", "n", "stages") or not values:
        raise ValueError("--grid must look like delta=0.1,0.2 or n=2,3 or stages=1,2")
    conv = float if name == "delta" else int
    try:
        vals = [conv(v) for v in values.split(",") if v.strip()]
    except ValueError:
        raise ValueError(f"cannot parse grid values {values!r}") from None
    if not vals:
        raise ValueError("grid is empty")
    return name, vals


@main.command()
@click.option("--protocol", type=click.Choice(experiments.PAPER_PROTOCOLS), required=True)
@click.option("--grid", required=True, help="Parameter and values, e.g. delta=0.1,0.2,0.4")
@click.option("--n", type=int, default=None)
@click.option("--delta", type=float, default=None)
@click.option("--stages", type=int, default=None)
@click.option("--trials", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--budget-qubits", type=int, default=None)
@out_option
@_guard
def sweep(protocol, grid, n, delta, stages, trials, seed, budget_qubits, out):
    """One CSV row of summary figures per grid point."""
    name, values = _parse_grid(grid)
    budget = _budget(budget_qubits)
    rows = []
    for v in values:
        params = {"n": n, "delta": delta, "stages": stages, name: v}
        if protocol == "and":
            r = experiments.and_summary(params["delta"] or 0.2, budget)
        elif protocol == "idmin-private":
            r = experiments.idmin_private_summary(params["n"] or 2)
        elif protocol == "idmin-leaky":
            r = experiments.idmin_leaky_summary(params["n"] or 6, params["delta"] or 0.25)
        else:
            r = experiments.disj_summary(params["n"] or 8, params["stages"], trials, seed, budget)
        rows.append({name: v, **{k: x for k, x in r.items() if not isinstance(x, (list, dict))}})
    cols = list(dict.fromkeys(k for r in rows for k in r))
    for r in rows:
        for c in cols:
            r.setdefault(c, "")
    _emit(rows_csv(cols, rows), out)


if __name__ == "__main__":
    main()
