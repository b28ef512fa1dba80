"""From a (1+eps)-embedding of a star to a sparse 1/2-unrelated family,
with a certificate that can be checked independently.

Run: python3 demos/02_certified_reduction.py
"""
import json

from l1lab import perturb_within_distortion, random_sign_star_embedding, run_pipeline, verify_certificate
from l1lab.serialize import canonical_dumps, certificate_from_dict, certificate_to_dict

n, eps = 128, 0.05

# An exact embedding, then as much noise as the distortion budget allows.
e = perturb_within_distortion(random_sign_star_embedding(n, n - 1, seed=1), eps, seed=2)

cert = run_pipeline(e, eps)
for name, fam in zip(("I", "II", "III", "IV"), cert.families):
    print(f"stage {name:>3}: {len(fam):4d} measures on {fam.k} atoms, "
          f"max support {int(fam.support_sizes().max())}")

# Every inequality is stored with both sides evaluated.
for c in cert.checks[:5]:
    print(f"  {c.name:28s} {c.lhs:12.6g} {c.relation} {c.rhs:.6g}")
print("  ...", len(cert.checks), "checks in total")

# Round-trip through JSON and re-verify from scratch.
text = canonical_dumps(certificate_to_dict(cert))
again = certificate_from_dict(json.loads(text))
print("verified:", verify_certificate(again).ok, f"({len(text) // 1024} KiB)")

# Tamper with one weight: the verifier names the broken inequalities.
data = json.loads(text)
data["stage_families"][3]["measures"][0][0] += 0.5
print(verify_certificate(certificate_from_dict(data)).failures)
