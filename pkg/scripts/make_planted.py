"""Write a planted-importance CSV (label column "label")."""
import argparse

from rashomon_audit.synthetic import make_planted, write_csv

p = argparse.ArgumentParser(description=__doc__)
p.add_argument("out")
p.add_argument("--n", type=int, default=4096)
p.add_argument("--k", type=int, default=10)
p.add_argument("--informative", type=int, default=3)
p.add_argument("--noise", type=float, default=0.1)
p.add_argument("--seed", type=int, default=0)
a = p.parse_args()
write_csv(make_planted(a.n, a.k, a.informative, a.noise, a.seed), a.out)
print(f"wrote {a.n} rows x {a.k} features to {a.out}")
