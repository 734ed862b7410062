"""Walk through the model zoo: print each path and its step response milestones.

Run: python demos/zoo_step_responses.py
"""

import numpy as np

from grateid.ltimodel import step_response
from grateid.zoo import ZOO, zoo_model


def milestones(y, dt, gain):
    # times at which the response reaches 63% and 95% of its final value
    t = np.arange(len(y)) * dt
    out = []
    for frac in (1 - np.exp(-1), 0.95):
        hit = np.nonzero(np.abs(y) >= frac * abs(gain))[0]
        out.append(t[hit[0]] if len(hit) else np.nan)
    return out


for name in sorted(ZOO):
    model = zoo_model(name)
    print(f"{name}: {model.output} <- {', '.join(model.inputs)}")
    for inp, path in zip(model.inputs, model.paths):
        horizon = 20 * max(sum(path.time_constants), 1.0)
        y = step_response(model, inp, 1.0, horizon).values
        t63, t95 = milestones(y, 5.0, path.gain)
        poles = ", ".join(f"{t:.1f}" for t in path.time_constants) or "static"
        print(f"  {inp:>8}  K={path.gain:+.5f}  T=[{poles}] s  final {y[-1]:+.5f}  "
              f"t63 {t63:.0f} s  t95 {t95:.0f} s")
