"""Command-line driver: ``check``, ``norm`` and ``model`` over vernacular files.

Exit codes: 0 when every item is accepted, 1 when an item is rejected or the
model refutes a judgment, 2 on usage and I/O errors (click's own code).
"""

import logging
import os
import sys
from pathlib import Path
from typing import Optional

import click

from .errors import KernelError
from .parser import pretty_print
from .schemas import ModelConfig, ReductionConfig, SoundnessReport, Verdict
from .vernacular import Session

logger = logging.getLogger(__name__)

SOURCE = click.Path(exists=True, dir_okay=False, readable=True, path_type=Path)


def _configure_logging(verbose: int) -> None:
    if verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = os.environ.get("CC_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


def _model_config(depth: Optional[int], rank: Optional[int], samples: Optional[int]) -> ModelConfig:
    values = {}
    if depth is not None:
        values["fixpoint_depth"] = depth
    if rank is not None:
        values["universe_rank"] = rank
    if samples is not None:
        values["sample_budget"] = samples
    return ModelConfig(**values)


def _load(ctx: click.Context, path: Path, model: Optional[ModelConfig] = None) -> Session:
    """Check ``path``, echoing accepted items; exits 1 on a syntax error."""
    session = Session(ctx.obj, model)
    try:
        source = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        ctx.fail(f"cannot read {path}: {exc}")
    try:
        session.load(source)
    except KernelError as exc:
        click.echo(exc.to_diagnostic().render(str(path)), err=True)
        ctx.exit(1)
    for result in session.results:
        click.echo(f"ok {result.kind} {result.name}")
        if result.kind in ("eval", "model") and result.detail:
            click.echo(f"  {result.detail}")
    for diagnostic in session.diagnostics:
        click.echo(diagnostic.render(str(path)), err=True)
    return session


def _write_report(path: Path, report: SoundnessReport) -> None:
    lines = []
    for result in report.results:
        key = result.name.replace(" ", "_")
        lines.append(f"judgment.{key}.verdict={result.verdict.value}")
        lines.append(f"judgment.{key}.depth={result.depth}")
        lines.append(f"judgment.{key}.samples={result.samples}")
    for verdict in Verdict:
        lines.append(f"summary.{verdict.value}={report.count(verdict)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


@click.group()
@click.option(
    "--max-steps",
    type=click.IntRange(min=1),
    default=None,
    help="Reduction fuel (CC_MAX_STEPS, default 100000).",
)
@click.option("-v", "--verbose", count=True, help="-v for INFO, -vv for DEBUG.")
@click.pass_context
def cli(ctx: click.Context, max_steps: Optional[int], verbose: int) -> None:
    """Type checker and finite-model soundness probe for the Calculus of Constructions."""
    _configure_logging(verbose)
    ctx.obj = ReductionConfig() if max_steps is None else ReductionConfig(max_steps=max_steps)


@cli.command()
@click.argument("source", type=SOURCE)
@click.option("--soundness", is_flag=True, help="Also probe every judgment in the model.")
@click.option("--depth", type=click.IntRange(min=1), default=None)
@click.pass_context
def check(ctx: click.Context, source: Path, soundness: bool, depth: Optional[int]) -> None:
    """Check every item of SOURCE."""
    session = _load(ctx, source, _model_config(depth, None, None))
    if soundness and session.ok:
        report = session.soundness()
        click.echo(report.render())
        if not report.ok:
            ctx.exit(1)
    if not session.ok:
        ctx.exit(1)


@cli.command()
@click.argument("source", type=SOURCE)
@click.option("--term", "term_text", required=True, help="Term to normalize.")
@click.pass_context
def norm(ctx: click.Context, source: Path, term_text: str) -> None:
    """Print the normal form of a term in the context of SOURCE."""
    session = _load(ctx, source)
    if not session.ok:
        ctx.exit(1)
    try:
        click.echo(pretty_print(session.normalize(session.parse_term(term_text))))
    except KernelError as exc:
        click.echo(exc.to_diagnostic().render("<term>"), err=True)
        ctx.exit(1)


@cli.command()
@click.argument("source", type=SOURCE)
@click.option("--term", "term_text", default=None, help="Term to interpret.")
@click.option("--type", "type_text", default=None, help="Type it should belong to.")
@click.option("--depth", type=click.IntRange(min=1), default=None, help="Fixpoint depth.")
@click.option("--rank", type=click.IntRange(min=0, max=4), default=None, help="Universe rank.")
@click.option("--samples", type=click.IntRange(min=1), default=None, help="Sample budget.")
@click.option(
    "--report",
    type=click.Path(dir_okay=False, writable=True, path_type=Path),
    default=None,
    help="Write a key=value report.",
)
@click.pass_context
def model(
    ctx: click.Context,
    source: Path,
    term_text: Optional[str],
    type_text: Optional[str],
    depth: Optional[int],
    rank: Optional[int],
    samples: Optional[int],
    report: Optional[Path],
) -> None:
    """Interpret a term of SOURCE, or every judgment of it, in the finite model."""
    if (term_text is None) != (type_text is None):
        raise click.UsageError("--term and --type go together")
    cfg = _model_config(depth, rank, samples)
    session = _load(ctx, source, cfg)
    if not session.ok:
        ctx.exit(1)
    if term_text is not None:
        try:
            t = session.parse_term(term_text)
            value, result = session.probe(t, session.parse_term(type_text), cfg, term_text)
        except KernelError as exc:
            click.echo(exc.to_diagnostic().render("<term>"), err=True)
            ctx.exit(1)
        click.echo(value)
        click.echo(f"member: {result.verdict.value}")
        click.echo(result.render())
        results = SoundnessReport(results=[result])
    else:
        results = session.soundness(cfg)
        click.echo(results.render())
    if report is not None:
        _write_report(report, results)
    if not results.ok:
        ctx.exit(1)


def run_cli(argv=None) -> int:
    try:
        cli.main(args=argv, prog_name="cc", standalone_mode=True)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    return 0


if __name__ == "__main__":
    sys.exit(run_cli())
