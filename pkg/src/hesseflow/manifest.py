"""Line-oriented manifest format driving the command-line runner.

Flat sections with key = value lines::

    [potential]
    family = log_cone        # or  expr = "x1^2/2 + x2^2/2"
    n = 2

    [samples]
    seed = 42
    count = 100
    box = -0.4:0.4, 1.0:1.8
    point = 0, 1             # repeatable, prepended to the sampled set

Comments run from ``#`` to end of line; values containing spaces or commas
are double-quoted; lists are comma-separated.  Sections: potential, samples,
soliton, flow, infogeo, output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

SECTIONS = ("potential", "samples", "soliton", "flow", "infogeo", "output")


class ManifestError(ValueError):
    """Malformed manifest; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass
class PotentialSection:
    expr: str | None = None
    family: str | None = None
    n: int | None = None
    eps: float | None = None
    freqs: tuple[int, ...] | None = None
    outcomes: int | None = None


@dataclass
class SamplesSection:
    seed: int = 0
    count: int = 0
    box: tuple[tuple[float, float], ...] | None = None
    points: list[tuple[float, ...]] = field(default_factory=list)


@dataclass
class SolitonSection:
    kind: str = "vector"
    lam: float = 0.0
    x: tuple[str, ...] | None = None
    f: str | None = None


@dataclass
class FlowSection:
    mode: str = "potential"
    scheme: str = "rk4"
    dt: float = 1e-3
    steps: int = 10
    shape: tuple[int, ...] = (32, 32)
    psi: str | None = None
    period: float = 6.283185307179586
    center: tuple[float, ...] | None = None
    spacing: float | None = None
    boundary: str | None = None
    boundary_lambda: float = 1.0


@dataclass
class InfogeoSection:
    outcomes: int = 2
    coords: str = "natural"
    points: int = 50
    a: float = 1.0
    box: tuple[tuple[float, float], ...] | None = None


@dataclass
class OutputSection:
    json: str | None = None
    csv: str | None = None
    figures: str | None = None
    dumps: bool = False


@dataclass
class Manifest:
    text: str
    potential: PotentialSection | None = None
    samples: SamplesSection | None = None
    soliton: SolitonSection | None = None
    flow: FlowSection | None = None
    infogeo: InfogeoSection | None = None
    output: OutputSection = field(default_factory=OutputSection)


def _strip_comment(line: str) -> str:
    quoted = False
    for i, ch in enumerate(line):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return line[:i]
    return line


def _unquote(value: str) -> str:
    value = value.strip()
    if len(value) >= 2 and value[0] == '"' and value[-1] == '"':
        return value[1:-1]
    return value


def _split_list(value: str) -> list[str]:
    parts: list[str] = []
    buf = []
    quoted = False
    for ch in value:
        if ch == '"':
            quoted = not quoted
            buf.append(ch)
        elif ch == "," and not quoted:
            parts.append("".join(buf).strip())
            buf = []
        else:
            buf.append(ch)
    parts.append("".join(buf).strip())
    return [p for p in parts if p]


def _as_int(value: str, line: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise ManifestError(f"expected an integer, got {value!r}", line) from None


def _as_float(value: str, line: int) -> float:
    try:
        return float(value)
    except ValueError:
        raise ManifestError(f"expected a number, got {value!r}", line) from None


def _as_bool(value: str, line: int) -> bool:
    low = value.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ManifestError(f"expected a boolean, got {value!r}", line)


def _as_box(value: str, line: int) -> tuple[tuple[float, float], ...]:
    ranges = []
    for part in _split_list(value):
        bits = part.split(":")
        if len(bits) != 2:
            raise ManifestError(f"box ranges are lo:hi, got {part!r}", line)
        lo, hi = _as_float(bits[0], line), _as_float(bits[1], line)
        if hi <= lo:
            raise ManifestError(f"empty range {part!r}", line)
        ranges.append((lo, hi))
    return tuple(ranges)


def parse_manifest(text: str) -> Manifest:
    manifest = Manifest(text=text)
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ManifestError("unterminated section header", lineno)
            name = line[1:-1].strip().lower()
            if name not in SECTIONS:
                raise ManifestError(
                    f"unknown section {name!r}; known: {', '.join(SECTIONS)}", lineno)
            section = name
            if name == "potential" and manifest.potential is None:
                manifest.potential = PotentialSection()
            elif name == "samples" and manifest.samples is None:
                manifest.samples = SamplesSection()
            elif name == "soliton" and manifest.soliton is None:
                manifest.soliton = SolitonSection()
            elif name == "flow" and manifest.flow is None:
                manifest.flow = FlowSection()
            elif name == "infogeo" and manifest.infogeo is None:
                manifest.infogeo = InfogeoSection()
            continue
        if "=" not in line:
            raise ManifestError(f"expected key = value, got {line!r}", lineno)
        if section is None:
            raise ManifestError("key outside any [section]", lineno)
        key, _, value = line.partition("=")
        key = key.strip().lower()
        value = value.strip()
        _assign(manifest, section, key, value, lineno)
    _validate(manifest)
    return manifest


def load_manifest(path) -> Manifest:
    return parse_manifest(Path(path).read_text())


def _assign(man: Manifest, section: str, key: str, value: str, line: int) -> None:
    if section == "potential":
        p = man.potential
        if key == "expr":
            p.expr = _unquote(value)
        elif key == "family":
            p.family = _unquote(value)
        elif key == "n":
            p.n = _as_int(value, line)
        elif key == "eps":
            p.eps = _as_float(value, line)
        elif key == "freqs":
            p.freqs = tuple(_as_int(v, line) for v in _split_list(value))
        elif key == "outcomes":
            p.outcomes = _as_int(value, line)
        else:
            raise ManifestError(f"unknown potential key {key!r}", line)
    elif section == "samples":
        s = man.samples
        if key == "seed":
            s.seed = _as_int(value, line)
        elif key == "count":
            s.count = _as_int(value, line)
        elif key == "box":
            s.box = _as_box(value, line)
        elif key == "point":
            s.points.append(tuple(_as_float(v, line) for v in _split_list(value)))
        else:
            raise ManifestError(f"unknown samples key {key!r}", line)
    elif section == "soliton":
        s = man.soliton
        if key == "kind":
            if value not in ("vector", "gradient"):
                raise ManifestError(f"kind must be vector or gradient, got {value!r}", line)
            s.kind = value
        elif key == "lambda":
            s.lam = _as_float(value, line)
        elif key == "x":
            s.x = tuple(_unquote(v) for v in _split_list(value))
        elif key == "f":
            s.f = _unquote(value)
        else:
            raise ManifestError(f"unknown soliton key {key!r}", line)
    elif section == "flow":
        f = man.flow
        if key == "mode":
            if value not in ("potential", "metric"):
                raise ManifestError(f"mode must be potential or metric, got {value!r}", line)
            f.mode = value
        elif key == "scheme":
            if value not in ("euler", "rk4"):
                raise ManifestError(f"scheme must be euler or rk4, got {value!r}", line)
            f.scheme = value
        elif key == "dt":
            f.dt = _as_float(value, line)
        elif key == "steps":
            f.steps = _as_int(value, line)
        elif key == "shape":
            f.shape = tuple(_as_int(v, line) for v in _split_list(value))
        elif key == "psi":
            f.psi = _unquote(value)
        elif key == "period":
            f.period = _as_float(value, line)
        elif key == "center":
            f.center = tuple(_as_float(v, line) for v in _split_list(value))
        elif key == "spacing":
            f.spacing = _as_float(value, line)
        elif key == "boundary":
            if value not in ("periodic", "frozen", "proportional"):
                raise ManifestError(
                    f"boundary must be periodic, frozen or proportional, got {value!r}",
                    line)
            f.boundary = value
        elif key == "boundary_lambda":
            f.boundary_lambda = _as_float(value, line)
        else:
            raise ManifestError(f"unknown flow key {key!r}", line)
    elif section == "infogeo":
        g = man.infogeo
        if key == "outcomes":
            g.outcomes = _as_int(value, line)
        elif key == "coords":
            if value not in ("natural", "mean"):
                raise ManifestError(f"coords must be natural or mean, got {value!r}", line)
            g.coords = value
        elif key == "points":
            g.points = _as_int(value, line)
        elif key == "a":
            g.a = _as_float(value, line)
        elif key == "box":
            g.box = _as_box(value, line)
        else:
            raise ManifestError(f"unknown infogeo key {key!r}", line)
    elif section == "output":
        o = man.output
        if key == "json":
            o.json = _unquote(value)
        elif key == "csv":
            o.csv = _unquote(value)
        elif key == "figures":
            o.figures = _unquote(value)
        elif key == "dumps":
            o.dumps = _as_bool(value, line)
        else:
            raise ManifestError(f"unknown output key {key!r}", line)


def _validate(man: Manifest) -> None:
    p = man.potential
    if p is not None:
        if (p.expr is None) == (p.family is None):
            raise ManifestError(
                "potential section needs exactly one of expr or family", 1)
        if p.expr is not None and p.n is None:
            raise ManifestError("expression potentials need n", 1)
