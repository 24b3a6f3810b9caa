"""Time a full audit on a Diabetes-shaped planted stand-in (768 x 8, B=64, all test rows)."""
import time
import warnings

from rashomon_audit.config import AuditConfig
from rashomon_audit.data import make_split
from rashomon_audit.pipeline import run_audit
from rashomon_audit.parallel import default_workers
from rashomon_audit.synthetic import make_planted

d = make_planted(n=768, k=8, informative=3, noise=0.25, seed=1)
t0 = time.perf_counter()
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    res = run_audit(AuditConfig(seed=0), workers=default_workers(), data=(d, make_split(d, 0.2, 0)))
print(f"grid {res.grid}; {len(res.cells)} cells; top {[e.family for e in res.selection.top]}; "
      f"{time.perf_counter() - t0:.0f}s with {default_workers()} worker(s)")
