"""Built-in named scenario models with pinned kernels.

The ternary scenarios carry literal kernel constants frozen into this file so
that experiment outputs and the acceptance suite never depend on external
files or on random-stream reproducibility across library versions. Windows
are first order throughout; pair packing follows the package convention
x + m_x * y.

- independent: X and Y are separate ternary first-order chains.
- unidirectional: Y is i.i.d.; X depends on (x_{i-1}, y_{i-1}). The target
  stays marginally first-order Markov here, so plug-in estimates are
  asymptotically unbiased.
- bidirectional: both processes depend on the full previous pair; the target
  is not marginally Markov of any finite order, the regime where truncated
  plug-in estimates converge to the truncated rate rather than the
  directed-information rate.
- cross-copy: binary processes that swap values each step, each copy flipped
  independently with probability epsilon.
- iid-influence: binary; Y i.i.d. Bernoulli(epsilon) selects which Bernoulli
  law (p1 or p2) generates the next X.
"""

from __future__ import annotations

import numpy as np

from .core import Alphabet
from .markov import JointMarkovModel

SCENARIO_NAMES = (
    "independent",
    "unidirectional",
    "bidirectional",
    "cross-copy",
    "iid-influence",
)

_TERNARY = Alphabet(3)
_BINARY = Alphabet(2)

# row-stochastic chains for the independent scenario
_INDEP_X = [[0.60, 0.25, 0.15], [0.20, 0.50, 0.30], [0.30, 0.20, 0.50]]
_INDEP_Y = [[0.50, 0.30, 0.20], [0.25, 0.45, 0.30], [0.15, 0.35, 0.50]]

_UNIDIR_Y_MARGINAL = [0.5, 0.3, 0.2]

# X rows indexed by window (x_{i-1} + 3 * y_{i-1})
_UNIDIR_X = [
    [0.11497574356351264, 0.22730588700764015, 0.6577183694288472],
    [0.1015187013088745, 0.3734653449509909, 0.5250159537401347],
    [0.24998035358736748, 0.12031012591285652, 0.6297095204997759],
    [0.4242868619435331, 0.1680446160660417, 0.4076685219904252],
    [0.2634389645744084, 0.16782051381163904, 0.5687405216139526],
    [0.2348868754017438, 0.20816577072183007, 0.5569473538764261],
    [0.2433085890485745, 0.3968219484873915, 0.359869462464034],
    [0.6542906735315851, 0.08013954525568401, 0.26556978121273084],
    [0.19353622444750795, 0.27248665551807605, 0.5339771200344159],
]

_BIDIR_X = [
    [0.19021967497497588, 0.09743297449165059, 0.7123473505333735],
    [0.19169356810536603, 0.10146101098703036, 0.7068454209076036],
    [0.438675622682973, 0.4787594477205847, 0.0825649295964424],
    [0.36770898590635714, 0.4794217388050952, 0.15286927528854763],
    [0.5746973682248865, 0.12401947588147193, 0.3012831558936416],
    [0.12973703977868414, 0.5598459669653756, 0.31041699325594035],
    [0.1868489554939675, 0.5478849764381547, 0.26526606806787784],
    [0.18773888817640588, 0.463627889637648, 0.34863322218594617],
    [0.3863695487610107, 0.15199224373069717, 0.46163820750829204],
]

_BIDIR_Y = [
    [0.07467217526051245, 0.8433838207463767, 0.08194400399311089],
    [0.49232680234503834, 0.3918613476650303, 0.11581184998993142],
    [0.5208870273522345, 0.07223452208820756, 0.406878450559558],
    [0.47585378409593876, 0.08058300360525615, 0.443563212298805],
    [0.6612155456545005, 0.18825723320884244, 0.1505272211366571],
    [0.27598034708364894, 0.47556939761395844, 0.24845025530239254],
    [0.1403964524584455, 0.36757009585298095, 0.49203345168857365],
    [0.26762071543827703, 0.6342238958636881, 0.09815538869803495],
    [0.6295495154585137, 0.2667139931665155, 0.10373649137497093],
]


def independent_model() -> JointMarkovModel:
    kx = np.zeros((9, 3))
    ky = np.zeros((9, 3))
    for w in range(9):
        kx[w] = _INDEP_X[w % 3]
        ky[w] = _INDEP_Y[w // 3]
    return JointMarkovModel(1, _TERNARY, _TERNARY, kx, ky)


def unidirectional_model() -> JointMarkovModel:
    kx = np.array(_UNIDIR_X)
    ky = np.tile(np.array(_UNIDIR_Y_MARGINAL), (9, 1))
    return JointMarkovModel(1, _TERNARY, _TERNARY, kx, ky)


def bidirectional_model() -> JointMarkovModel:
    return JointMarkovModel(1, _TERNARY, _TERNARY, np.array(_BIDIR_X), np.array(_BIDIR_Y))


def cross_copy_model(epsilon: float = 0.1) -> JointMarkovModel:
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must be in (0, 1)")
    kx = np.zeros((4, 2))
    ky = np.zeros((4, 2))
    for w in range(4):
        xprev, yprev = w % 2, w // 2
        kx[w, yprev] = 1.0 - epsilon
        kx[w, 1 - yprev] = epsilon
        ky[w, xprev] = 1.0 - epsilon
        ky[w, 1 - xprev] = epsilon
    return JointMarkovModel(1, _BINARY, _BINARY, kx, ky)


def iid_influence_model(
    p1: float = 0.9, p2: float = 0.1, epsilon: float = 0.1
) -> JointMarkovModel:
    for name, v in (("p1", p1), ("p2", p2), ("epsilon", epsilon)):
        if not (0.0 < v < 1.0):
            raise ValueError(f"{name} must be in (0, 1)")
    kx = np.zeros((4, 2))
    for w in range(4):
        p = p1 if w // 2 == 1 else p2
        kx[w] = [1.0 - p, p]
    ky = np.tile([1.0 - epsilon, epsilon], (4, 1))
    return JointMarkovModel(1, _BINARY, _BINARY, kx, ky)


def scenario_model(name: str, **params) -> JointMarkovModel:
    """Model for a named scenario; parameters apply to the parametric ones."""
    builders = {
        "independent": independent_model,
        "unidirectional": unidirectional_model,
        "bidirectional": bidirectional_model,
        "cross-copy": cross_copy_model,
        "iid-influence": iid_influence_model,
    }
    if name not in builders:
        raise ValueError(f"unknown scenario {name!r}; choose from {SCENARIO_NAMES}")
    return builders[name](**params)
