from __future__ import annotations
import logging
from typing import TYPE_CHECKING, List

from shearlab.adapters import csv_format
from shearlab.domain import analysis, commands, counterexamples, covariance, criterion, events, lattice, scenarios
from shearlab.domain.artifacts import Artifact
from shearlab.domain.exceptions import FullyDecayed, ValidationError
from shearlab.domain.flows import PAdicTranslation
from shearlab.domain.padic import PAdicInteger

if TYPE_CHECKING:
    from . import unit_of_work

logger = logging.getLogger(__name__)


def run_covariance(
    cmd: commands.RunCovariance,
    uow: unit_of_work.AbstractUnitOfWork,
) -> covariance.CovarianceSeries:
    for obs in (cmd.f1, cmd.f2):
        obs.check_chart(cmd.flow.chart)
    series = covariance.cov_series(cmd.flow, cmd.f1, cmd.f2, cmd.times, cmd.estimator)
    with uow:
        artifact = csv_format.series_artifact(cmd.artifact, series)
        artifact.events.append(events.CovarianceComputed(cmd.artifact, series, cmd.fit, cmd.block))
        uow.artifacts.add(artifact)
        uow.commit()
    return series


def run_criterion(
    cmd: commands.RunCriterion,
    uow: unit_of_work.AbstractUnitOfWork,
) -> criterion.CriterionReport:
    report = criterion.criterion_report(cmd.velocity, cmd.xi_cutoff, cmd.deltas, cmd.grid)
    with uow:
        artifact = csv_format.criterion_artifact(cmd.artifact, report)
        artifact.events.append(events.VerdictReached(cmd.artifact, report.verdict, report.witness))
        uow.artifacts.add(artifact)
        uow.commit()
    return report


def run_perturbation_smoke(
    cmd: commands.RunPerturbationSmoke,
    uow: unit_of_work.AbstractUnitOfWork,
):
    before, after = criterion.perturbation_smoke(
        cmd.velocity, cmd.amount, cmd.direction, cmd.xi_cutoff, cmd.deltas, cmd.grid
    )
    with uow:
        for name, report in ((f"{cmd.artifact}_before", before), (cmd.artifact, after)):
            artifact = csv_format.criterion_artifact(name, report)
            artifact.events.append(events.VerdictReached(name, report.verdict, report.witness))
            uow.artifacts.add(artifact)
        uow.commit()
    return before, after


def run_gauss(
    cmd: commands.RunGauss,
    uow: unit_of_work.AbstractUnitOfWork,
) -> List[lattice.TrendRow]:
    rows = lattice.convergence_trend(cmd.radii, cmd.epsilon, cmd.dim, cmd.center)
    with uow:
        artifact = csv_format.gauss_artifact(cmd.artifact, rows)
        artifact.add_comment(f"tail deviation: {csv_format.number(rows[0].tail_deviation)}")
        artifact.add_comment(f"ambiguous: {sum(row.ambiguous for row in rows)}")
        uow.artifacts.add(artifact)
        uow.commit()
    return rows


def run_padic(
    cmd: commands.RunPadic,
    uow: unit_of_work.AbstractUnitOfWork,
) -> covariance.CovarianceSeries:
    obs = counterexamples.PAdicCharacterObservable(cmd.p, cmd.level, cmd.character)
    orbit = counterexamples.padic_orbit_values(
        cmd.p, cmd.digits,
        PAdicInteger.from_int(cmd.shift, cmd.p, cmd.digits), obs,
        PAdicInteger.from_int(cmd.y0, cmd.p, cmd.digits), cmd.n_max,
    )
    flow = PAdicTranslation(cmd.p, cmd.atoms or (cmd.shift,), cmd.digits)
    series = counterexamples.padic_covariance_series(flow, obs, range(cmd.n_max + 1), cmd.samples, cmd.seed)
    periodic = all(orbit[n] == orbit[n + cmd.p] for n in range(len(orbit) - cmd.p))
    with uow:
        artifact = Artifact(cmd.artifact, csv_format.CERTIFICATE_HEADER)
        for t, value in zip(series.times, series.values):
            artifact.add_row(csv_format.number(t), csv_format.number(abs(value)), "padic")
        artifact.add_comment(
            f"certificate: {cmd.p}-periodic={periodic}, distinct values={len(set(orbit))}"
        )
        uow.artifacts.add(artifact)
        uow.commit()
    return series


def run_sphere_check(
    cmd: commands.RunSphereCheck,
    uow: unit_of_work.AbstractUnitOfWork,
) -> List[counterexamples.SphereCertificate]:
    certificates = [
        counterexamples.sphere_no_decay_certificate(cmd.f1, cmd.f2, t0, cmd.samples, cmd.seed)
        for t0 in cmd.t0s
    ]
    with uow:
        artifact = Artifact(cmd.artifact, csv_format.CERTIFICATE_HEADER)
        for certificate in certificates:
            csv_format.certificate_rows(artifact, certificate)
            artifact.events.append(events.CertificateChecked(cmd.artifact, certificate.t0, certificate.difference))
        uow.artifacts.add(artifact)
        uow.commit()
    return certificates


def run_saturn(
    cmd: commands.RunSaturn,
    uow: unit_of_work.AbstractUnitOfWork,
) -> List[scenarios.SaturnFrame]:
    frames = scenarios.run_saturn(cmd.cloud, cmd.times, cmd.positions)
    with uow:
        for artifact in csv_format.saturn_artifacts(cmd.artifact, frames):
            uow.artifacts.add(artifact)
        uow.commit()
    return frames


def run_wavefront(
    cmd: commands.RunWavefront,
    uow: unit_of_work.AbstractUnitOfWork,
) -> List[scenarios.WavefrontFrame]:
    frames = scenarios.run_wavefront(cmd.directions, cmd.times, cmd.positions)
    with uow:
        for artifact in csv_format.wavefront_artifacts(cmd.artifact, frames):
            uow.artifacts.add(artifact)
        uow.commit()
    return frames


def append_decay_fit(
    event: events.CovarianceComputed,
    uow: unit_of_work.AbstractUnitOfWork,
):
    try:
        fit = analysis.FITS[event.fit](event.series, block=event.block)
        comment = csv_format.fit_comment(fit, event.fit)
    except FullyDecayed:
        comment = "fit: fully decayed"
    except ValidationError as error:
        logger.info("no decay fit for %s: %s", event.artifact, error)
        return
    with uow:
        artifact = uow.artifacts.get(event.artifact)
        artifact.add_comment(comment)
        uow.commit()


def log_verdict(
    event: events.VerdictReached,
    uow: unit_of_work.AbstractUnitOfWork,
):
    logger.info("%s: %s (witness %s)", event.artifact, event.verdict, event.witness)


def warn_on_broken_period(
    event: events.CertificateChecked,
    uow: unit_of_work.AbstractUnitOfWork,
):
    if event.difference < counterexamples.PERIOD_TOLERANCE:
        logger.info("%s: periodic at t0=%s within %.3g", event.artifact, event.t0, event.difference)
    else:
        logger.warning("%s: periodicity broken at t0=%s by %.3g", event.artifact, event.t0, event.difference)
