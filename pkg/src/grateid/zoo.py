"""The reference grate incineration models, in offset dimensionless variables.

All dead times are zero. Signal names follow :mod:`grateid.plant`
(``Q_SP`` is the steam load setpoint).
"""

from __future__ import annotations

import numpy as np

from .ltimodel import AlgebraicLink, Composite, MisoModel, ProcessModel, chain_subprocesses
from .plant import FlueGasComposition, VariableConvention, flue_gas_mass_flow


def _model(output, rows):
    return MisoModel(output, tuple(r[0] for r in rows),
                     tuple(ProcessModel(r[1], r[2]) for r in rows))


BASIC = _model("Q_steam", [
    ("Q_SP", 0.98703, (1525.2,)),
    ("T_Pair", 0.082006, (38.561,)),
    ("H2O", 0.10116, (566.98, 566.98)),
    ("CO2", -0.7977, (7635.1, 7635.1)),
    ("O2", -1.4063, (320.17,)),
])

PRIMARY_AIR = _model("V_Pair", [
    ("Q_SP", 0.68754, (799.67,)),
    ("T_Pair", 0.33679, (4025.5,)),
    ("H2O", 0.89669, (836.38,)),
    ("CO2", -0.75509, (4686.5, 4686.5)),
    ("O2", -0.79057, (5182.0,)),
])

SECONDARY_AIR = _model("V_Sair", [
    ("Q_SP", 0.83353, (830.16,)),
    ("H2O", -0.17113, (96.153,)),
    ("CO2", -1.4383, (8367.7, 8367.7)),
    ("O2", -1.271, ()),
])

FURNACE_TEMPERATURE = _model("T_furn", [
    ("V_Pair", -0.057537, (6113.0, 4262.9)),
    ("V_Sair", 0.34828, (213.55, 3.638)),
    ("Q_SP", 0.016756, (2114.7, 2004.7)),
    ("H2O", 0.0041691, ()),
])

STEAM_GENERATOR = _model("Q_steam", [
    ("Gamma", 0.81495, (189.63, 181.22)),
    ("m_furn", 0.14197, (9479.9,)),
    ("T_furn", 0.67983, (30.29,)),
])

ZOO = {
    "basic": BASIC,
    "primary_air": PRIMARY_AIR,
    "secondary_air": SECONDARY_AIR,
    "furnace_temperature": FURNACE_TEMPERATURE,
    "steam_generator": STEAM_GENERATOR,
}


def zoo_model(name: str) -> MisoModel:
    try:
        return ZOO[name]
    except KeyError:
        raise KeyError(f"unknown zoo model {name!r}; choose from {sorted(ZOO)}") from None


def fuel_flow_link(k_p: float) -> AlgebraicLink:
    return AlgebraicLink("V_waste", ("Q_SP",), lambda Q_SP: k_p * Q_SP,
                         "V_waste = K_P * Q_SP")


def mass_flow_link(convention: VariableConvention | None = None) -> AlgebraicLink:
    """Flue gas mass flow (model coordinates) from model-coordinate air flows and composition."""
    conv = convention or VariableConvention.default()

    def m_furn(V_Pair, V_Sair, H2O, O2, CO2):
        # air flows are referenced in Nm^3/h
        v_p = conv.model_to_physical("V_Pair", V_Pair) / 3600.0
        v_s = conv.model_to_physical("V_Sair", V_Sair) / 3600.0
        comp = FlueGasComposition(conv.from_model("H2O", H2O), conv.from_model("O2", O2),
                                  conv.from_model("CO2", CO2))
        _, m = flue_gas_mass_flow(comp, v_p, v_s)
        return conv.physical_to_model("m_furn", m)

    return AlgebraicLink("m_furn", ("V_Pair", "V_Sair", "H2O", "O2", "CO2"), m_furn,
                         "flue gas N2 balance")


def gamma_link(convention: VariableConvention | None = None) -> AlgebraicLink:
    conv = convention or VariableConvention.default()

    def gamma(T_furn, m_furn):
        t = conv.model_to_physical("T_furn", T_furn)
        m = conv.model_to_physical("m_furn", m_furn)
        return conv.physical_to_model("Gamma", t * m)

    return AlgebraicLink("Gamma", ("T_furn", "m_furn"), gamma, "Gamma = T_furn * m_furn")


def comprehensive_composite(k_p: float = 1.0, convention: VariableConvention | None = None,
                            models: dict | None = None) -> Composite:
    """Chained subprocess models: air supply, heat release, algebraic links, steam generator.

    ``models`` may replace any of the zoo subprocess models by output name.
    """
    chosen = {m.output: m for m in (PRIMARY_AIR, SECONDARY_AIR, FURNACE_TEMPERATURE,
                                     STEAM_GENERATOR)}
    chosen.update(models or {})
    return chain_subprocesses(
        list(chosen.values()),
        [fuel_flow_link(k_p), mass_flow_link(convention), gamma_link(convention)],
    )


def steady_state_gain(model: MisoModel, input: str) -> float:
    return float(np.asarray(model.path(input).gain))
