"""Physical preprocessing for grate incineration signals.

Covers the ram-feeder to fuel-flow transform, steam thermal power, the
flue-gas volume/mass balance, the temperature-mass-flow product ``Gamma``
and the offset/reference variable convention the reference models use.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.signal import find_peaks

from .dataset import Channel
from .errors import (
    LengthMismatch,
    NonPhysicalComposition,
    NonPositiveEnthalpyDrop,
    NoStrokeDetected,
    UnknownVariable,
    ValidationError,
)

MOLAR_VOLUME = 22.414e-3  # m^3/mol, ideal gas at standard conditions
MOLAR_MASS = {"N2": 28.0134e-3, "O2": 31.998e-3, "CO2": 44.009e-3, "H2O": 18.015e-3}  # kg/mol
N2_IN_AIR = 0.79
GAMMA_REFERENCE = 2.02e4


# ---------------------------------------------------------------------------
# Variable convention

@dataclass(frozen=True)
class Variable:
    offset: float
    reference: float
    unit: str


# The setpoint shares the steam load's scaling.
_TABLE = {
    "Q_steam": Variable(0.817581, 32.2, "MW"),
    "V_Pair": Variable(0.781564, 3.95e4, "Nm3/h"),
    "V_Sair": Variable(0.857033, 1.76e4, "Nm3/h"),
    "T_Pair": Variable(1.029000, 120.0, "degC"),
    "T_furn": Variable(0.944238, 880.0, "degC"),
    "m_furn": Variable(0.802818, 23.0, "kg/s"),
    "Gamma": Variable(0.758052, 2.02e4, "K kg/s"),
    "O2": Variable(0.078830, 100.0, "%"),
    "CO2": Variable(0.112913, 100.0, "%"),
    "H2O": Variable(0.144002, 100.0, "%"),
    # not tabulated; used for the fuel flow of synthetic records
    "V_waste": Variable(1.0, 0.02, "m3/s"),
}
_ALIASES = {"Q_SP": "Q_steam"}


@dataclass(frozen=True)
class VariableConvention:
    """Offsets and reference values relating physical, dimensionless and model values.

    ``x = x_phys / reference`` and ``x_model = x - offset``.
    """

    variables: Mapping[str, Variable]
    aliases: Mapping[str, str]

    @classmethod
    def default(cls) -> "VariableConvention":
        return cls(dict(_TABLE), dict(_ALIASES))

    @classmethod
    def from_dict(cls, d: Mapping) -> "VariableConvention":
        base = cls.default()
        variables = dict(base.variables)
        for name, row in d.get("variables", {}).items():
            variables[name] = Variable(float(row["offset"]), float(row["reference"]),
                                       row.get("unit", ""))
        aliases = dict(base.aliases)
        aliases.update(d.get("aliases", {}))
        return cls(variables, aliases)

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        names = list(self.variables) if names is None else names
        rows = {}
        for n in names:
            v = self[n]
            rows[n] = {"offset": v.offset, "reference": v.reference, "unit": v.unit}
        return rows

    def __contains__(self, name):
        return self.aliases.get(name, name) in self.variables

    def __getitem__(self, name: str) -> Variable:
        key = self.aliases.get(name, name)
        try:
            return self.variables[key]
        except KeyError:
            raise UnknownVariable(f"no convention entry for {name!r}") from None

    def to_dimensionless(self, name, x_phys):
        return np.asarray(x_phys, dtype=float) / self[name].reference

    def to_physical(self, name, x):
        return np.asarray(x, dtype=float) * self[name].reference

    def to_model(self, name, x):
        return np.asarray(x, dtype=float) - self[name].offset

    def from_model(self, name, x_model):
        return np.asarray(x_model, dtype=float) + self[name].offset

    def physical_to_model(self, name, x_phys):
        return self.to_model(name, self.to_dimensionless(name, x_phys))

    def model_to_physical(self, name, x_model):
        return self.to_physical(name, self.from_model(name, x_model))


def apply_offsets(x, convention: VariableConvention, name: str, direction: str = "to_model"):
    """Shift a dimensionless signal into (``to_model``) or out of (``from_model``) model coordinates.

    Accepts a :class:`Channel` (its name is used when ``name`` is None) or an array.
    """
    if isinstance(x, Channel):
        return x.with_values(apply_offsets(x.values, convention, name or x.name, direction))
    if direction == "to_model":
        return convention.to_model(name, x)
    if direction == "from_model":
        return convention.from_model(name, x)
    raise ValidationError(f"unknown direction {direction!r}")


# ---------------------------------------------------------------------------
# Ram feeder

def _stroke_starts(x: np.ndarray, min_stroke: float) -> np.ndarray:
    span = np.ptp(x)
    if span == 0:
        return np.array([], dtype=int)
    # pad so that minima sitting on the record edges are detectable
    padded = np.concatenate([[-np.inf], -x, [-np.inf]])
    peaks, props = find_peaks(padded, prominence=min_stroke * span, plateau_size=1)
    # the stroke begins when the ram leaves its rear position: last sample of a plateau
    return props["right_edges"] - 1


def ram_to_fuel_flow(position, ram_area: float = 1.0, min_stroke: float = 0.1,
                     name: str = "V_waste") -> Channel:
    """Volumetric fuel flow estimated from ram feeder position.

    Each stroke period runs from one rear-most position (local minimum) to
    the next; over the period the flow is the swept volume divided by the
    period length. Samples before the first and after the last complete
    stroke take the nearest period's value. Passing several channels
    (parallel feeders) returns their average flow.

    Parameters
    ----------
    position : Channel or sequence of Channel
        Ram position, increasing towards the grate.
    ram_area : float
        Ram face area in m^2. Leave at 1 when the data is standardized later.
    min_stroke : float
        Minimum stroke as a fraction of the position range for a minimum to count.
    """
    if not isinstance(position, Channel):
        chans = list(position)
        flows = [ram_to_fuel_flow(c, ram_area, min_stroke, name) for c in chans]
        if len({len(f) for f in flows}) != 1:
            raise LengthMismatch("ram feeder channels differ in length")
        return flows[0].with_values(np.mean([f.values for f in flows], axis=0))

    x = position.values
    dt = position.sample_period
    starts = _stroke_starts(x, min_stroke)
    if len(starts) < 2:
        raise NoStrokeDetected(f"channel {position.name!r}: no complete ram stroke found")
    flow = np.empty_like(x)
    for i, (a, b) in enumerate(zip(starts[:-1], starts[1:])):
        value = ram_area * (np.max(x[a:b + 1]) - x[a]) / ((b - a) * dt)
        lo = 0 if i == 0 else a
        flow[lo:b] = value
    flow[starts[-1]:] = flow[starts[-1] - 1]
    return Channel(name, flow, dt, "m3/s")


# ---------------------------------------------------------------------------
# Steam and flue gas

def steam_power(m_ls, h_steam, h_feedwater):
    """Steam thermal power in MW from mass flow (kg/s) and enthalpies (kJ/kg)."""
    drop = np.asarray(h_steam, dtype=float) - np.asarray(h_feedwater, dtype=float)
    if np.any(drop <= 0):
        raise NonPositiveEnthalpyDrop("live steam enthalpy must exceed feedwater enthalpy")
    q = np.asarray(m_ls, dtype=float) * drop / 1000.0
    return float(q) if q.ndim == 0 else q


@dataclass(frozen=True)
class FlueGasComposition:
    """Measured flue gas fractions (volume fractions, not percent).

    ``h2o_wet`` refers to wet flue gas, ``o2_dry`` and ``co2_dry`` to dry flue gas.
    Fields may be scalars or equally shaped arrays.
    """

    h2o_wet: object
    o2_dry: object
    co2_dry: object
    n2_air: float = N2_IN_AIR

    def wet_fractions(self) -> dict[str, np.ndarray]:
        h2o = np.asarray(self.h2o_wet, dtype=float)
        dry = 1.0 - h2o
        o2 = np.asarray(self.o2_dry, dtype=float) * dry
        co2 = np.asarray(self.co2_dry, dtype=float) * dry
        n2 = 1.0 - h2o - o2 - co2
        if np.any(n2 <= 0):
            raise NonPhysicalComposition("nitrogen closure gives a non-positive fraction")
        if np.any(h2o < 0) or np.any(o2 < 0) or np.any(co2 < 0):
            raise NonPhysicalComposition("negative flue gas fraction")
        return {"N2": n2, "O2": o2, "CO2": co2, "H2O": h2o}


def flue_gas_mass_flow(comp: FlueGasComposition, v_pair, v_sair):
    """Wet flue gas volume flow (Nm^3/s) and mass flow (kg/s) from an N2 balance.

    Nitrogen from the combustion air is taken as inert, so the air flows and
    the N2 fraction of the wet flue gas fix the flue gas volume flow.
    """
    v_air = np.asarray(v_pair, dtype=float) + np.asarray(v_sair, dtype=float)
    if np.any(v_air < 0):
        raise ValidationError("air flows must be non-negative")
    phi = comp.wet_fractions()
    v_fg = comp.n2_air / phi["N2"] * v_air
    molar_mass = sum(phi[i] * MOLAR_MASS[i] for i in MOLAR_MASS)
    m_fg = v_fg / MOLAR_VOLUME * molar_mass
    if np.ndim(v_fg) == 0:
        return float(v_fg), float(m_fg)
    return v_fg, m_fg


def gamma_product(t_furn, m_furn, reference: float = GAMMA_REFERENCE):
    """Dimensionless ``Gamma = T_furn * m_furn / reference``.

    ``t_furn`` is the numeric furnace temperature in degC and ``m_furn`` the flue
    gas mass flow in kg/s; channels or arrays are accepted.
    """
    tv = t_furn.values if isinstance(t_furn, Channel) else np.asarray(t_furn, dtype=float)
    mv = m_furn.values if isinstance(m_furn, Channel) else np.asarray(m_furn, dtype=float)
    if tv.shape != mv.shape:
        raise LengthMismatch("furnace temperature and mass flow are not aligned")
    g = tv * mv / reference
    if isinstance(t_furn, Channel):
        return t_furn.with_values(g, name="Gamma", unit="-")
    return float(g) if g.ndim == 0 else g
