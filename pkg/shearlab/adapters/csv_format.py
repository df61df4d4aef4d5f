import math
from typing import Iterable, Sequence

from shearlab.domain.analysis import DecayFit
from shearlab.domain.artifacts import Artifact
from shearlab.domain.counterexamples import SphereCertificate
from shearlab.domain.covariance import CovarianceSeries
from shearlab.domain.criterion import CriterionReport
from shearlab.domain.lattice import TrendRow
from shearlab.domain.scenarios import SaturnFrame, WavefrontFrame

SERIES_HEADER = ("t", "re", "im", "abs", "stderr", "estimator")
CRITERION_HEADER = ("xi", "delta", "measure")
CERTIFICATE_HEADER = ("t", "abs_cov", "tag")
GAUSS_HEADER = ("r", "epsilon", "count", "asymptotic", "ratio")


def number(value) -> str:
    return "%.17g" % value


def frequency(xi: Sequence[int]) -> str:
    return " ".join(str(k) for k in xi)


def series_artifact(name: str, series: CovarianceSeries) -> Artifact:
    artifact = Artifact(name, SERIES_HEADER)
    for t, value, err in zip(series.times, series.values, series.stderr):
        artifact.add_row(number(t), number(value.real), number(value.imag), number(abs(value)),
                         number(err), series.estimator)
    return artifact


def fit_comment(fit: DecayFit, model: str) -> str:
    comment = fit.comment()
    return comment if model == "power" else f"{comment}, model={model}"


def criterion_artifact(name: str, report: CriterionReport, label: str = "") -> Artifact:
    artifact = Artifact(name, CRITERION_HEADER)
    append_criterion(artifact, report, label)
    return artifact


def append_criterion(artifact: Artifact, report: CriterionReport, label: str = ""):
    for xi, delta, measure in report.rows():
        artifact.add_row(frequency(xi), number(delta), number(measure))
    witness = "" if report.witness is None else f" (xi={frequency(report.witness)})"
    prefix = f"{label} " if label else ""
    artifact.add_comment(f"{prefix}verdict: {report.verdict}{witness}")


def certificate_rows(artifact: Artifact, certificate: SphereCertificate):
    artifact.add_row(number(certificate.t0), number(abs(certificate.cov_t0)), "t0")
    artifact.add_row(number(certificate.t0 + 2 * math.pi), number(abs(certificate.cov_shifted)), "t0+2pi")
    artifact.add_comment(f"difference: t0={number(certificate.t0)} value={number(certificate.difference)}")


def gauss_artifact(name: str, rows: Iterable[TrendRow]) -> Artifact:
    artifact = Artifact(name, GAUSS_HEADER)
    for row in rows:
        artifact.add_row(number(row.radius), number(row.epsilon), str(row.count),
                         number(row.asymptotic), number(row.ratio))
    return artifact


def saturn_artifacts(name: str, frames: Sequence[SaturnFrame]):
    modes = Artifact(name, ("t",) + tuple(f"mode_{k + 1}" for k in range(len(frames[0].modes))))
    positions = Artifact(f"{name}_positions", ("t", "particle", "x", "y"))
    for frame in frames:
        modes.add_row(number(frame.t), *(number(m) for m in frame.modes))
        for i, (x, y) in enumerate(zip(frame.x, frame.y)):
            positions.add_row(number(frame.t), str(i), number(x), number(y))
    return modes, positions


def wavefront_artifacts(name: str, frames: Sequence[WavefrontFrame]):
    discrepancy = Artifact(name, ("t", "discrepancy"))
    points = Artifact(f"{name}_points", ("t", "point", "x", "y"))
    for frame in frames:
        discrepancy.add_row(number(frame.t), number(frame.discrepancy))
        for i, (x, y) in enumerate(zip(frame.x, frame.y)):
            points.add_row(number(frame.t), str(i), number(x), number(y))
    return discrepancy, points
