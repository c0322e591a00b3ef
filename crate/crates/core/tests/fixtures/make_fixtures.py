"""Regenerate the strace fixtures and their expected tallies.

Each line is emitted from a recipe that already knows its kind and call
name, so expected.json is tallied without parsing the output.
"""
import json
import random
from collections import Counter
from pathlib import Path

HERE = Path(__file__).parent / "logs"
CALLS = ["openat", "read", "write", "close", "mmap", "fstat", "ioctl", "futex",
         "clone", "epoll_wait", "getuid32", "_llseek", "rt_sigaction", "sendto"]
ARGS = ['"/data/app/base.apk", O_RDONLY', "3, \"\\x7fELF\", 832", "1, \"(x)\", 3",
        "AT_FDCWD, \"a(b)\", 0", "NULL, 4096, PROT_READ", "0xbeef, FUTEX_WAIT, 0, NULL"]


def prefix(rng):
    return rng.choice(["", "", f"{rng.randint(100, 99999)} ", f"[pid {rng.randint(1, 9999):>5}] "])


def line(rng, kind):
    p = prefix(rng)
    name = rng.choice(CALLS)
    arg = rng.choice(ARGS)
    if kind == "call":
        return p + f"{name}({arg}) = {rng.randint(-1, 9)}", name
    if kind == "unfinished":
        return p + f"{name}({arg} <unfinished ...>", name
    if kind == "resumed":
        return p + f"<... {name} resumed> ) = 0", None
    if kind == "signal":
        return p + "--- SIGCHLD {si_signo=SIGCHLD, si_code=CLD_EXITED} ---", None
    if kind == "exit":
        return p + rng.choice(["+++ exited with 0 +++", "+++ killed by SIGKILL +++"]), None
    return rng.choice(["", "   ", "strace: Process 4242 attached", "???", "= 0",
                       "123", "[pid 12", "<... resumed> = 0", "9open(x) = 1"]), None


def write_log(path, rng, n_lines, weights):
    kinds = rng.choices(list(weights), weights=list(weights.values()), k=n_lines)
    counts, summary, out = Counter(), Counter(), []
    for kind in kinds:
        text, name = line(rng, kind)
        out.append(text)
        summary[kind] += 1
        if name is not None:
            counts[name] += 1
    path.write_text("\n".join(out) + "\n")
    return dict(sorted(counts.items())), {k: summary.get(k, 0) for k in weights}


def main():
    rng = random.Random(7)
    weights = {"call": 60, "unfinished": 8, "resumed": 8, "signal": 4, "exit": 2, "garbage": 18}
    expected = {}
    counts, summary = write_log(HERE / "mixed.strace", rng, 100, weights)
    expected["mixed"] = {"counts": counts, "summary": summary}
    rows = ["path,label,sample_id"]
    for i in range(10):
        sid = f"s{i:02d}"
        label = "M" if i < 5 else "B"
        n = rng.randint(20, 60)
        counts, summary = write_log(HERE / f"{sid}.strace", rng, n, weights)
        expected[sid] = {"label": label, "counts": counts, "summary": summary}
        rows.append(f"{sid}.strace,{label},{sid}")
    (HERE / "manifest.csv").write_text("\n".join(rows) + "\n")
    (HERE / "expected.json").write_text(json.dumps(expected, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
