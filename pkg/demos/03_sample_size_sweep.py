"""A small version of the rescaled sample-size sweep.

With ``n = r d log m`` the relative error depends on ``r`` and hardly on
``m``.  The full-size run is ``eivlasso sweep --config configs/rescaled_sweep.ini``.
"""

import tempfile

from eivlasso.harness.config import load_config
from eivlasso.harness.sweep import run_sweep

cfg = load_config("configs/rescaled_sweep.ini").with_(m=(128, 256), trials=10)
with tempfile.TemporaryDirectory() as out:
    rows = run_sweep(cfg, out_dir=out)

print(f"{'m':>5} {'n':>5} {'n/(d log m)':>12} {'rel l2':>8} {'se':>7}")
for r in rows:
    print(f"{r['m']:>5} {r['n']:>5} {r['rescaled_n']:>12.2f} "
          f"{r['rel_l2_error']:>8.3f} {r['rel_l2_stderr']:>7.3f}")
