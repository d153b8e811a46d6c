"""Model/experiment definition files (structured text) and their parsing.

The format is INI-style with three sections:

    [model]       dimension, name
    [hopping]     integer offset -> coefficient expression per order
                  ("0,1 = -1 | 0.5*sin(x1)"); reserved keys decay_rate,
                  expansion_order
    [potential]   V = expression per order; wells = "x1 x2 ; x1 x2"
    [domain]      epsilon list, lattice box, periodic axes, M_j/M_k boxes,
                  ellipse parameter a, band R, eikonal grid, target level

Expressions are evaluated over numpy with the coordinates bound to
x1..xd; only a fixed namespace of math functions is exposed.
"""

import configparser
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .models import HoppingFamily, ModelError, ModelSpec, PotentialExpansion

_EXPR_NAMES = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "abs": np.abs, "cosh": np.cosh, "sinh": np.sinh,
    "tanh": np.tanh, "arccosh": np.arccosh, "arcsinh": np.arcsinh,
    "pi": np.pi, "e": np.e, "minimum": np.minimum, "maximum": np.maximum,
}


def compile_expression(expr, dim):
    """Vectorized closure (n, d) -> (n,) from an expression in x1..xd."""
    code = compile(expr.strip(), f"<expr: {expr.strip()}>", "eval")
    for name in code.co_names:
        if name not in _EXPR_NAMES and not (name.startswith("x") and name[1:].isdigit()):
            raise ModelError(f"unknown name {name!r} in expression {expr!r}")

    def fn(pts, _code=code, _dim=dim):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        env = {f"x{nu + 1}": pts[:, nu] for nu in range(_dim)}
        env.update(_EXPR_NAMES)
        out = eval(_code, {"__builtins__": {}}, env)
        return np.broadcast_to(np.asarray(out, dtype=float), (pts.shape[0],)).copy()

    return fn


def _parse_number(tok):
    tok = tok.strip()
    if "/" in tok:
        return float(Fraction(tok))
    return float(tok)


def _parse_vector(text):
    return [_parse_number(t) for t in text.replace(",", " ").split()]


def _parse_boxes(text):
    """'lo hi ; lo hi' -> (d, 2) array."""
    rows = [r for r in text.split(";") if r.strip()]
    box = np.array([_parse_vector(r) for r in rows], dtype=float)
    if box.shape[1] != 2:
        raise ModelError(f"box rows need [lo hi]: {text!r}")
    return box


@dataclass
class ExperimentConfig:
    model: ModelSpec
    eps_list: list
    box: np.ndarray
    periodic: tuple
    mask_j_box: np.ndarray
    mask_k_box: np.ndarray
    well_j: int
    well_k: int
    ellipse_a: float
    band_R: float
    eikonal_box: np.ndarray
    eikonal_grid: tuple
    target_level: int = 0
    seed: int = 0
    threads: int = 1
    name: str = "experiment"

    def validate(self):
        if not self.eps_list:
            raise ModelError("empty epsilon list")
        if any(e <= 0 for e in self.eps_list):
            raise ModelError("epsilon values must be positive")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ModelError("epsilon values must be strictly decreasing")
        if self.well_j == self.well_k:
            raise ModelError("wells j and k must be distinct")
        wells = self.model.potential.wells
        if not (wells[self.well_j][-1] < 0.0 < wells[self.well_k][-1]):
            raise ModelError("coordinate convention violated: need x^j_d < 0 < x^k_d")
        if np.allclose(self.mask_j_box, self.mask_k_box):
            raise ModelError("M_j and M_k coincide; wells must be separated")
        return self


def load_model(path_or_text, from_text=False):
    """Parse a model definition file; returns (ModelSpec, raw parser)."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.optionxform = str
    if from_text:
        cp.read_string(path_or_text)
    else:
        read = cp.read(path_or_text)
        if not read:
            raise ModelError(f"cannot read model file {path_or_text}")
    if "model" not in cp or "hopping" not in cp or "potential" not in cp:
        raise ModelError("model file needs [model], [hopping], [potential] sections")
    dim = cp.getint("model", "dimension")
    name = cp.get("model", "name", fallback="model")

    entries = {}
    decay = 1.0
    exp_order = 1
    for key, val in cp["hopping"].items():
        if key == "decay_rate":
            decay = float(val)
            continue
        if key == "expansion_order":
            exp_order = int(val)
            continue
        eta = tuple(int(t) for t in key.replace(",", " ").split())
        if len(eta) != dim:
            raise ModelError(f"offset {key!r} does not match dimension {dim}")
        entries[eta] = [compile_expression(part, dim) for part in val.split("|")]
    hopping = HoppingFamily(entries, expansion_order=exp_order, decay_rate=decay)

    vexprs = cp.get("potential", "V").split("|")
    terms = [compile_expression(part, dim) for part in vexprs]
    wells = [_parse_vector(w) for w in cp.get("potential", "wells").split(";") if w.strip()]
    potential = PotentialExpansion(terms, wells=np.array(wells, dtype=float))
    return ModelSpec(hopping, potential, dimension=dim, name=name), cp


def load_experiment(path, overrides=None):
    """Parse a full experiment configuration (model + [domain] section)."""
    model, cp = load_model(path)
    if "domain" not in cp:
        raise ModelError("experiment file needs a [domain] section")
    dom = cp["domain"]
    dim = model.dimension

    eps_list = [_parse_number(t) for t in dom.get("epsilon").split()]
    box = _parse_boxes(dom.get("box"))
    if box.shape[0] != dim:
        raise ModelError("box dimension mismatch")
    periodic = [False] * dim
    for t in dom.get("periodic", fallback="").split():
        periodic[int(t)] = True

    cfg = ExperimentConfig(
        model=model,
        eps_list=eps_list,
        box=box,
        periodic=tuple(periodic),
        mask_j_box=_parse_boxes(dom.get("M_j")),
        mask_k_box=_parse_boxes(dom.get("M_k")),
        well_j=dom.getint("well_j", fallback=0),
        well_k=dom.getint("well_k", fallback=1),
        ellipse_a=float(dom.get("ellipse_a")),
        band_R=float(dom.get("band_R")),
        eikonal_box=_parse_boxes(dom.get("eikonal_box", fallback=dom.get("box"))),
        eikonal_grid=tuple(int(t) for t in dom.get("grid").split()),
        target_level=dom.getint("target_level", fallback=0),
        seed=dom.getint("seed", fallback=0),
        threads=dom.getint("threads", fallback=1),
        name=model.name,
    )
    if overrides:
        for key, val in overrides.items():
            if val is not None:
                setattr(cfg, key, val)
    return cfg.validate()
