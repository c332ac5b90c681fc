"""Glove game with left-glove owners given as 1-indexed players."""
import sys

left = {int(p) for p in sys.argv[1:]}
for line in sys.stdin:
    bits = line.strip()
    members = {j + 1 for j, b in enumerate(bits) if b == "1"}
    print(min(len(members & left), len(members - left)), flush=True)
