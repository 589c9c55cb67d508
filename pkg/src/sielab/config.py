"""Run configuration: a sectioned key-value text format.

Example::

    [geometry]
    R = 2.0
    interfaces = 1.0            # ascending radii, comma separated
    # obstacle_radius = 0.5
    # obstacle_arcs = 0:3.141592653589793:DIRICHLET, 3.141592653589793:6.283185307179586:NEUMANN

    [coefficients]
    c = 1.0, 2.0                # one value per region, region 0 outermost
    p = 1.0, 3.0

    [wave]
    s_re = 1.0
    s_im = 0.0

    [mesh]
    target_h = 0.2
    levels = 3

    [solver]
    M = auto
    metric = trace

    [data]
    interface = 0
    modes = 0, 2
    jump_D = 1.0, 0.5
    jump_N = 0.5, -1.0

    [probe]
    kappa_min = 2.3
    kappa_max = 2.5
    points = 21
    axis = imag

    [output]
    seed = 0

Every section and key is optional; unknown sections or keys are errors.
Values are validated against the standing assumptions before any solve:
(C1) ``s != 0`` and ``Re s >= 0``; (C2) positive coefficients; (C3) all
circles strictly inside ``B_R``.
"""

import configparser
from dataclasses import dataclass, field
import math

from .errors import ConfigurationError
from .mesh import GeometrySpec, Obstacle

_SCHEMA = {
    "geometry": {"R", "interfaces", "obstacle_radius", "obstacle_arcs", "mesh_file"},
    "coefficients": {"c", "p"},
    "wave": {"s_re", "s_im"},
    "mesh": {"target_h", "levels"},
    "solver": {"M", "metric"},
    "data": {"interface", "modes", "jump_D", "jump_N"},
    "probe": {"kappa_min", "kappa_max", "points", "axis", "target_h", "R"},
    "output": {"seed", "dir"},
}

DEFAULT_CONFIG = """\
[geometry]
R = 2.0
interfaces = 1.0

[coefficients]
c = 1.0, 2.0
p = 1.0, 3.0

[wave]
s_re = 1.0
s_im = 0.0

[mesh]
target_h = 0.2
levels = 3

[data]
interface = 0
modes = 0, 2
jump_D = 1.0, 0.5
jump_N = 0.5, -1.0
"""


@dataclass(frozen=True)
class RunConfig:
    """Validated run parameters (see the module docstring for the grammar)."""

    spec: GeometrySpec
    c: tuple
    p: tuple
    s: complex
    target_h: float = 0.2
    levels: int = 3
    M: object = None
    metric: str = "trace"
    seed: int = 0
    out: str = None
    mesh_file: str = None
    drive_interface: int = 0
    drive: dict = field(default_factory=dict)       # m -> (a_m, b_m)
    probe: dict = field(default_factory=dict)

    @property
    def J(self):
        return len(self.spec.interface_radii)


def _floats(text, what):
    try:
        return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    except ValueError:
        raise ConfigurationError(f"{what}: expected a comma-separated list of numbers") from None


def _float(text, what):
    try:
        return float(text)
    except ValueError:
        raise ConfigurationError(f"{what}: expected a number, got {text!r}") from None


def _int(text, what):
    try:
        return int(text)
    except ValueError:
        raise ConfigurationError(f"{what}: expected an integer, got {text!r}") from None


def parse_config(text):
    """Parse and validate configuration text into a :class:`RunConfig`.

    Raises
    ------
    ConfigurationError
        On syntax errors, unknown keys or violated assumptions; the message
        names the violated assumption (``C1``, ``C2`` or ``C3``).
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from None
    for sec in cp.sections():
        if sec not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{sec}]")
        for key in cp[sec]:
            if key not in _SCHEMA[sec]:
                raise ConfigurationError(f"unknown key {key!r} in section [{sec}]")

    def get(sec, key, default=None):
        return cp[sec][key] if cp.has_option(sec, key) else default

    # (C1) wavenumber
    s = complex(_float(get("wave", "s_re", "1.0"), "s_re"), _float(get("wave", "s_im", "0.0"), "s_im"))
    if s == 0 or not (math.isfinite(s.real) and math.isfinite(s.imag)):
        raise ConfigurationError("C1: wavenumber must be nonzero")
    if s.real < 0:
        raise ConfigurationError("C1: wavenumber must have non-negative real part")

    # (C3) geometry
    R = _float(get("geometry", "R", "2.0"), "R")
    if not R > 0:
        raise ConfigurationError("C3: truncation radius R must be positive")
    radii = _floats(get("geometry", "interfaces", ""), "interfaces")
    if any(not (0 < r < R) for r in radii):
        raise ConfigurationError("C3: all interfaces must lie strictly inside B_R")
    obstacle = None
    if get("geometry", "obstacle_radius") is not None:
        ro = _float(get("geometry", "obstacle_radius"), "obstacle_radius")
        if not 0 < ro < R:
            raise ConfigurationError("C3: the obstacle must lie strictly inside B_R")
        arcs_text = get("geometry", "obstacle_arcs")
        if arcs_text:
            arcs = []
            for item in arcs_text.split(","):
                parts = item.strip().split(":")
                if len(parts) != 3:
                    raise ConfigurationError("obstacle_arcs: expected start:end:KIND entries")
                arcs.append((_float(parts[0], "arc start"), _float(parts[1], "arc end"),
                             parts[2].strip().upper()))
            obstacle = Obstacle(ro, tuple(arcs))
        else:
            obstacle = Obstacle(ro)
    spec = GeometrySpec(R, radii, obstacle)

    # (C2) coefficients
    n_reg = len(radii) + 1
    c = _floats(get("coefficients", "c", ",".join(["1.0"] * n_reg)), "c")
    p = _floats(get("coefficients", "p", ",".join(["1.0"] * n_reg)), "p")
    if len(c) != n_reg or len(p) != n_reg:
        raise ConfigurationError(f"coefficients: need {n_reg} values of c and p (one per region)")
    if min(c) <= 0:
        raise ConfigurationError("C2: diffusion coefficients must be positive (a_min > 0)")
    if min(p) <= 0:
        raise ConfigurationError("C2: mass coefficients must be positive (p_min > 0)")

    target_h = _float(get("mesh", "target_h", "0.2"), "target_h")
    if not 0 < target_h <= R / 4:
        raise ConfigurationError("mesh: target_h must lie in (0, R/4]")
    levels = _int(get("mesh", "levels", "3"), "levels")
    if levels < 1:
        raise ConfigurationError("mesh: levels must be at least 1")
    M = get("solver", "M", "auto")
    M = None if M.strip().lower() == "auto" else _int(M, "M")
    metric = get("solver", "metric", "trace").strip().lower()
    if metric not in ("trace", "l2"):
        raise ConfigurationError("solver: metric must be 'trace' or 'l2'")

    k = _int(get("data", "interface", "0"), "interface")
    modes = tuple(int(m) for m in _floats(get("data", "modes", ""), "modes"))
    jd = _floats(get("data", "jump_D", ""), "jump_D")
    jn = _floats(get("data", "jump_N", ""), "jump_N")
    if not (len(modes) == len(jd) == len(jn)):
        raise ConfigurationError("data: modes, jump_D and jump_N must have equal length")
    if modes and not 0 <= k < max(len(radii), 1):
        raise ConfigurationError("data: interface index out of range")
    if modes and not radii:
        raise ConfigurationError("data: jump drives need at least one interface")
    drive = {m: (a, b) for m, a, b in zip(modes, jd, jn)}

    probe = {
        "kappa_min": _float(get("probe", "kappa_min", "2.3"), "kappa_min"),
        "kappa_max": _float(get("probe", "kappa_max", "2.5"), "kappa_max"),
        "points": _int(get("probe", "points", "21"), "points"),
        "axis": get("probe", "axis", "imag").strip().lower(),
        "target_h": _float(get("probe", "target_h", "0.018"), "probe target_h"),
        "R": _float(get("probe", "R", "1.25"), "probe R"),
    }
    if probe["axis"] not in ("imag", "real"):
        raise ConfigurationError("probe: axis must be 'imag' or 'real'")
    if probe["points"] < 2 or not probe["kappa_max"] > probe["kappa_min"] > 0:
        raise ConfigurationError("probe: need 0 < kappa_min < kappa_max and points >= 2")

    return RunConfig(spec=spec, c=c, p=p, s=s, target_h=target_h, levels=levels, M=M,
                     metric=metric, seed=_int(get("output", "seed", "0"), "seed"),
                     out=get("output", "dir"), mesh_file=get("geometry", "mesh_file"),
                     drive_interface=k, drive=drive, probe=probe)


def load_config(path):
    """Read and validate a configuration file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file: {exc}") from None
    return parse_config(text)
