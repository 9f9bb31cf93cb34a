"""Regenerates the synthetic inputs of the golden regression fixture.

The report files (scores.csv, report.json, report.csv) are produced by the
ddgkit CLI from these inputs and frozen; see tests/acceptance.cpp.
"""
import json
import math
import random

AA = "ACDEFGHIKLMNPQRSTVWY"
rng = random.Random(20240611)
MC_FLANK = 5
FRAG_FLANK = 1


def fmt(x):
    return "%.16e" % x


def normalized_row():
    w = [rng.uniform(0.05, 1.0) for _ in AA]
    z = sum(w)
    return [math.log(v / z) for v in w]


def seq_ll(matrix, seq):
    return sum(matrix[i][AA.index(c)] for i, c in enumerate(seq))


def window(seq, center, flank):
    first = max(1, center - flank)
    last = min(len(seq), center + flank)
    return seq[first - 1:last]


def mutate(seq, pos, c):
    return seq[:pos - 1] + c + seq[pos:]


proteins = {
    "P1": "".join(rng.choice(AA) for _ in range(40)),
    "P2": "".join(rng.choice(AA) for _ in range(36)),
}

records = []  # (protein, code, list of (pos, wt, mt))
for pid, wt in proteins.items():
    n = 24 if pid == "P1" else 22
    sites = rng.sample(range(1, len(wt) + 1), n)
    for pos in sites:
        mt = rng.choice([c for c in AA if c != wt[pos - 1]])
        records.append((pid, [(pos, wt[pos - 1], mt)]))
    if pid == "P1":
        a, b = sorted(rng.sample(range(1, len(wt) + 1), 2))
        records.append((pid, [(a, wt[a - 1], "G" if wt[a - 1] != "G" else "A"),
                              (b, wt[b - 1], "W" if wt[b - 1] != "W" else "Y")]))

# Folded structures: one crystal-like matrix plus three perturbed members.
folded = {}
for pid, wt in proteins.items():
    base = [normalized_row() for _ in wt]
    members = {pid + "_xtal": base}
    for k in range(3):
        members["%s_m%d" % (pid, k)] = [
            [v + rng.gauss(0, 0.3) for v in row] for row in base]
    folded[pid] = members

# Unfolded letter preferences (position independent) per MC member and per fragment.
mc = {pid: {"%s_mc%d" % (pid, k): {c: rng.gauss(-3.0, 0.4) for c in AA} for k in range(5)} for pid in proteins}
frag_pref = {c: rng.gauss(-3.0, 0.5) for c in AA}


def variant_seq(wt, muts):
    s = wt
    for pos, _, c in muts:
        s = mutate(s, pos, c)
    return s


def write_table(path, ensemble, state, rows):
    rows = sorted(rows)
    with open(path, "w") as f:
        f.write("ensemble_id,state,structure_id,sequence,log_likelihood\n")
        for sid, seq, ll in rows:
            f.write("%s,%s,%s,%s,%s\n" % (ensemble, state, sid, seq, fmt(ll)))


config_tables = {"folded_single": {}, "folded_multi": {}, "unfolded_mc": {}, "unfolded_fragment": {}}
for pid, wt in proteins.items():
    muts_list = [m for p, m in records if p == pid]
    seqs = {wt} | {variant_seq(wt, m) for m in muts_list}
    single = [(pid + "_xtal", s, seq_ll(folded[pid][pid + "_xtal"], s)) for s in seqs]
    write_table("%s_folded_single.csv" % pid, pid + "_single", "F", single)
    multi = [(sid, s, seq_ll(mat, s)) for sid, mat in folded[pid].items() for s in seqs]
    write_table("%s_folded_multi.csv" % pid, pid + "_multi", "F", multi)

    mc_rows = set()
    frag_rows = set()
    for muts in muts_list:
        for pos, _, c in muts:
            single_mt = mutate(wt, pos, c)
            for win in (window(wt, pos, MC_FLANK), window(single_mt, pos, MC_FLANK)):
                for sid, pref in mc[pid].items():
                    mc_rows.add((sid, win, sum(pref[x] for x in win)))
            for win in (window(wt, pos, FRAG_FLANK), window(single_mt, pos, FRAG_FLANK)):
                frag_rows.add(("%s_frag_%d" % (pid, pos), win, sum(frag_pref[x] for x in win)))
    write_table("%s_unfolded_mc.csv" % pid, pid + "_mc", "U", mc_rows)
    write_table("%s_fragments.csv" % pid, pid + "_frag", "U", frag_rows)
    for role, name in (("folded_single", "folded_single"), ("folded_multi", "folded_multi"),
                       ("unfolded_mc", "unfolded_mc"), ("unfolded_fragment", "fragments")):
        config_tables[role][pid] = "%s_%s.csv" % (pid, name)

# Targets: noisy function of the crystal log-odds, in unfolding orientation.
with open("dataset.csv", "w") as f:
    f.write("protein_id,wild_type_sequence,mutations,target,censored\n")
    lines = []
    for i, (pid, muts) in enumerate(records):
        wt = proteins[pid]
        mat = folded[pid][pid + "_xtal"]
        score = -(seq_ll(mat, variant_seq(wt, muts)) - seq_ll(mat, wt))
        target = -(0.6 * score + rng.gauss(0, 0.8))
        censored = pid == "P2" and i % 9 == 0
        if censored:
            target = -4.0
        code = ";".join("%s%d%s" % (w, p, c) for p, w, c in muts)
        lines.append("%s,%s,%s,%.3f,%d\n" % (pid, wt, code, target, int(censored)))
    f.writelines(sorted(lines))

counts = {c: 0 for c in AA}
for wt in proteins.values():
    for c in wt:
        counts[c] += 1
with open("marginal_counts.csv", "w") as f:
    f.write("amino_acid,count\n")
    for c in AA:
        f.write("%s,%d\n" % (c, counts[c]))

with open("folded_sequence.csv", "w") as f:
    f.write("amino_acid,count\n")
    for c in AA:
        f.write("%s,%d\n" % (c, counts[c] * 3 + (7 if c in "ILVFWY" else 1)))

config = {
    "dataset": {"path": "dataset.csv", "sign_convention": "unfolding", "min_variants_per_protein": 20},
    "mode": "whole_sequence",
    "tables": config_tables,
    "models": {"marginal": "marginal_counts.csv", "idp_counts": "../../../data/idp_counts_synthetic.csv",
               "folded_sequence": "folded_sequence.csv", "pseudo_count": 0.5},
    "fragment_flank": FRAG_FLANK,
    "mc_flank": MC_FLANK,
    "strategies": ["folded_single", "folded_single_pa", "folded_multi", "folded_multi_pa",
                   "full_f_single_u_multi", "full_f_multi_u_multi", "hybrid_idp_f_single",
                   "hybrid_idp_f_multi", "hybrid_fragment_f_single", "hybrid_fragment_f_multi",
                   "sequence_only"],
    "bootstrap": {"resamples": 100},
    "seed": 12345,
}
with open("run.json", "w") as f:
    json.dump(config, f, indent=2)
    f.write("\n")
