'''
Scenario files: one `[scenario]` section (tag, seed, output), a `[flow]`
section, observable sections `[f1]` / `[f2]`, and a parameter section named
after the tag. Lists are comma-separated; frequencies and matrix rows are
space-separated, matrix rows are split by `;`. An observable term reads

    term.<label> = <xi> : <profile-id> : key=value key=value ...

and a pure torus observable may instead name a coefficient `law` and `cutoff`.
'''
from __future__ import annotations
import configparser
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple, Union

import numpy as np

from shearlab import config
from shearlab.domain import commands, covariance, flows, observables, scenarios
from shearlab.domain.exceptions import ValidationError

logger = logging.getLogger(__name__)


class MalformedConfig(ValidationError):
    pass


class UnknownScenario(ValidationError):
    pass


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.replace(",", " ").split())


def _ints(text: str) -> Tuple[int, ...]:
    return tuple(int(item) for item in text.replace(",", " ").split())


def _matrix(text: str) -> List[Tuple[float, ...]]:
    return [_floats(row) for row in text.split(";") if row.strip()]


def _times(text: str) -> Tuple[float, ...]:
    '''`a..b` (integers, inclusive), `linspace a b k`, `geomspace a b k`, or a comma list.'''
    text = text.strip()
    if ".." in text and not text.startswith(("linspace", "geomspace")):
        start, stop = (int(part) for part in text.split(".."))
        return tuple(float(n) for n in range(start, stop + 1))
    words = text.split()
    if words[0] in ("linspace", "geomspace"):
        if len(words) != 4:
            raise MalformedConfig(f"expected `{words[0]} start stop count`, got {text!r}")
        spacing = np.linspace if words[0] == "linspace" else np.geomspace
        return tuple(float(t) for t in spacing(float(words[1]), float(words[2]), int(words[3])))
    return _floats(text)


def _param(value: str) -> Union[float, complex, Tuple[float, ...], List[Tuple[float, ...]]]:
    if ";" in value:
        return _matrix(value)
    if "," in value:
        return _floats(value)
    try:
        return float(value)
    except ValueError:
        return complex(value.replace(" ", ""))


def _section(parser: configparser.ConfigParser, name: str) -> configparser.SectionProxy:
    if not parser.has_section(name):
        raise MalformedConfig(f"missing section [{name}]")
    return parser[name]


def _prefixed(section: configparser.SectionProxy, prefix: str) -> Dict[str, str]:
    return {key[len(prefix):]: value for key, value in section.items() if key.startswith(prefix)}


def _chart(section: configparser.SectionProxy) -> flows.Chart:
    lower, upper = _floats(section["chart.lower"]), _floats(section["chart.upper"])
    periodic = tuple(word.strip().lower() in ("1", "true", "yes")
                     for word in section.get("chart.periodic", "").split(",") if word.strip())
    return flows.Chart(lower, upper, periodic or (False,) * len(lower))


def _velocity(section: configparser.SectionProxy, chart: flows.Chart) -> flows.VelocityField:
    params = {key: _param(value) for key, value in _prefixed(section, "velocity.").items()}
    velocity = flows.make_velocity(section["velocity"], chart, **params)
    if "perturb.amount" in section:
        velocity = velocity.perturbed(float(section["perturb.amount"]), _floats(section["perturb.direction"]))
    return velocity


def build_flow(section: configparser.SectionProxy) -> flows.FlowSpec:
    kind = section.get("kind", "product")
    if kind == "transvection":
        return flows.Transvection(section.get("variant", "lower"))
    if kind == "torus-geodesic":
        return flows.TorusGeodesic(section.getint("dim", 2))
    if kind == "disk-billiard":
        return flows.DiskBilliard()
    if kind == "sphere-geodesic":
        return flows.SphereGeodesic()
    chart = _chart(section)
    velocity = _velocity(section, chart)
    density = flows.make_density(section.get("density", "uniform"), chart, section.getfloat("reweight", 0.0))
    if kind == "product":
        return flows.ProductFlow(velocity, density)
    if kind == "suspension":
        base = flows.BaseMapSpec(section.get("base", "doubling"), section.getfloat("alpha", 0.0),
                                 section.getint("bits", 2048))
        return flows.Suspension(base, velocity, density)
    raise flows.UnknownRegistryId(f"unknown flow kind {kind!r}")


def _profile(text: str) -> Tuple[Tuple[int, ...], observables.BaseProfile]:
    parts = [part.strip() for part in text.split(":")]
    if len(parts) not in (2, 3):
        raise MalformedConfig(f"observable term {text!r} is not `xi : profile : params`")
    xi = _ints(parts[0])
    params = {}
    for item in (parts[2].split() if len(parts) == 3 else []):
        key, _, value = item.partition("=")
        params[key] = _param(value)
    if parts[1] == "trig":
        modes = params.pop("k")
        params = {"modes": {tuple(int(k) for k in np.atleast_1d(modes)): params.pop("c", 1.0)}}
    for key in ("value", "amplitude"):
        if key in params:
            params[key] = complex(params[key])
    return xi, observables.make_profile(parts[1], **params)


def build_observable(parser: configparser.ConfigParser, name: str, flow: flows.FlowSpec) -> observables.FourierObservable:
    section = _section(parser, name)
    if "law" in section:
        obs = observables.coefficient_law(
            section["law"], section.getint("cutoff", 12), section.getfloat("scale", 1.0), name,
            skip_invariant=section.getboolean("skip_invariant", False),
        )
    else:
        terms = dict(_profile(value) for value in _prefixed(section, "term.").values())
        if not terms:
            raise MalformedConfig(f"[{name}] declares no terms")
        obs = observables.FourierObservable(terms, flow.n, flow.d, name)
    if (obs.n, obs.d) != (flow.n, flow.d):
        raise flows.DimensionMismatch(f"[{name}] does not live on the phase space of {flow.flow_id}")
    obs.check_chart(flow.chart)
    return obs


def _seed(scenario: configparser.SectionProxy, seed: Optional[int]) -> int:
    if seed is not None:
        return seed
    if "seed" not in scenario:
        raise MalformedConfig("this scenario is stochastic and needs a seed")
    return scenario.getint("seed")


def _seed_or_zero(scenario: configparser.SectionProxy, seed: Optional[int]) -> int:
    return seed if seed is not None else scenario.getint("seed", config.get_default_seed())


def _covariance(parser, scenario, artifact, seed, threads):
    flow = build_flow(_section(parser, "flow"))
    params = _section(parser, "covariance")
    kind = params.get("estimator", covariance.SPECTRAL)
    estimator = covariance.EstimatorSpec(
        kind=kind,
        samples=params.getint("samples", 10_000),
        seed=_seed(scenario, seed) if kind == covariance.MONTECARLO else _seed_or_zero(scenario, seed),
        quadrature=covariance.QuadSpec(tolerance=params.getfloat("tolerance", 1e-6)),
        threads=threads,
        common_random_numbers=params.getboolean("crn", False),
    )
    return commands.RunCovariance(
        artifact, flow,
        build_observable(parser, "f1", flow), build_observable(parser, "f2", flow),
        _times(params["times"]), estimator,
        fit=params.get("fit", "power"), block=params.getint("block", 10),
    )


def _criterion_params(params: configparser.SectionProxy) -> dict:
    grid = params.getint("grid", 0)
    return dict(
        xi_cutoff=params.getint("xi_cutoff", 8),
        deltas=_floats(params.get("deltas", "0.08, 0.04, 0.02, 0.01")),
        grid=grid or None,
    )


def _flow_velocity(parser) -> flows.VelocityField:
    flow = build_flow(_section(parser, "flow"))
    velocity = getattr(flow, "velocity", None)
    if velocity is None:
        raise MalformedConfig(f"{flow.flow_id} has no velocity field to check")
    return velocity


def _criterion(parser, scenario, artifact, seed, threads):
    params = parser["criterion"] if parser.has_section("criterion") else parser["DEFAULT"]
    return commands.RunCriterion(artifact, _flow_velocity(parser), **_criterion_params(params))


def _perturbation(parser, scenario, artifact, seed, threads):
    params = _section(parser, "perturbation-smoke")
    return commands.RunPerturbationSmoke(
        artifact, _flow_velocity(parser),
        amount=float(params["amount"]), direction=_ints(params["direction"]),
        **_criterion_params(params),
    )


def _gauss(parser, scenario, artifact, seed, threads):
    params = _section(parser, "gauss")
    dim = params.getint("dim", 2)
    center = tuple(c.strip() for c in params.get("center", ",".join("0" * dim)).split(","))
    return commands.RunGauss(
        artifact, dim, center,
        tuple(r.strip() for r in params["radii"].split(",")), params["epsilon"].strip(),
    )


def _padic(parser, scenario, artifact, seed, threads):
    params = _section(parser, "padic")
    return commands.RunPadic(
        artifact,
        p=int(params["p"]), level=params.getint("level", 0), shift=int(params["shift"]),
        y0=params.getint("y0", 0), character=params.getint("character", 1),
        digits=params.getint("digits", 16), n_max=params.getint("n_max", 20),
        atoms=_ints(params.get("atoms", "")), samples=params.getint("samples", 10_000),
        seed=_seed(scenario, seed),
    )


def _sphere(parser, scenario, artifact, seed, threads):
    flow = flows.SphereGeodesic()
    params = _section(parser, "sphere-check")
    return commands.RunSphereCheck(
        artifact, build_observable(parser, "f1", flow), build_observable(parser, "f2", flow),
        _floats(params["t0"]), params.getint("samples", 10_000), _seed(scenario, seed),
    )


def _saturn(parser, scenario, artifact, seed, threads):
    params = _section(parser, "saturn")
    cloud = scenarios.SaturnCloud(
        float(params["r0"]), float(params["r1"]), float(params["arc"]),
        params.getint("particles", 100_000), _seed(scenario, seed),
        radial_bins=params.getint("bins", 16),
    )
    return commands.RunSaturn(artifact, cloud, _times(params["times"]), params.getint("positions", 0))


def _wavefront(parser, scenario, artifact, seed, threads):
    params = _section(parser, "torus-wavefront")
    return commands.RunWavefront(
        artifact, params.getint("directions", 20_000), _times(params["times"]),
        params.getint("positions", 0),
    )


BUILDERS = {
    "covariance": _covariance,
    "criterion": _criterion,
    "perturbation-smoke": _perturbation,
    "gauss": _gauss,
    "padic": _padic,
    "sphere-check": _sphere,
    "saturn": _saturn,
    "torus-wavefront": _wavefront,
}  # type: Dict[str, Callable[..., commands.Command]]


def parse(text: str, seed: Optional[int] = None, threads: Optional[int] = None) -> commands.Command:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    scenario = _section(parser, "scenario")
    tag = scenario.get("tag", "")
    try:
        builder = BUILDERS[tag]
    except KeyError:
        raise UnknownScenario(f"unknown scenario tag {tag!r}") from None
    if threads is None:
        threads = scenario.getint("threads", config.get_threads())
    try:
        command = builder(parser, scenario, scenario.get("output", tag), seed, threads)
    except (KeyError, TypeError) as error:
        raise MalformedConfig(f"{tag} scenario: missing or bad key {error}") from error
    except ValueError as error:
        if isinstance(error, ValidationError):
            raise
        raise MalformedConfig(f"{tag} scenario: {error}") from error
    logger.debug("scenario %s -> %s", tag, type(command).__name__)
    return command


def load(path: Path, seed: Optional[int] = None, threads: Optional[int] = None) -> commands.Command:
    return parse(Path(path).read_text(), seed, threads)
