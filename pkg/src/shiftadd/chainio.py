"""Transform chain serialization.

Line-delimited text: one header line, then one line per factor.  Raw
coefficients are written as C99 hex floats and term lists as compact JSON,
so save/load round-trips are bit-exact.
"""

import json
from fractions import Fraction

from .errors import ChainFormatError
from .factors import Factor, TransformChain
from .sopot import SopotValue

MAGIC = "shiftadd-chain"
VERSION = "v1"


def _coeff_token(coeff) -> str:
    if isinstance(coeff, SopotValue):
        return "sopot:" + json.dumps(coeff.to_dict(), separators=(",", ":"))
    return "raw:" + float(coeff).hex()


def _parse_coeff(token, line_no):
    if token.startswith("raw:"):
        try:
            return float.fromhex(token[4:])
        except ValueError:
            raise ChainFormatError(f"bad raw coefficient {token!r}", line_no)
    if token.startswith("sopot:"):
        try:
            return SopotValue.from_dict(json.loads(token[6:]))
        except Exception:
            raise ChainFormatError(f"bad term-list coefficient {token!r}", line_no)
    raise ChainFormatError(f"unknown coefficient token {token!r}", line_no)


def chain_to_text(chain: TransformChain) -> str:
    g = chain.scale_log2
    lines = [
        f"{MAGIC} {VERSION} n={chain.n} family={chain.family} "
        f"scale_log2={g.numerator}/{g.denominator} factors={len(chain.factors)}"
    ]
    for f in chain.factors:
        if f.kind in ("B", "O"):
            i, j = f.indices
            lines.append(f"{f.kind} {i} {j} {f.variant}")
        elif f.kind == "H4":
            lines.append("H4 " + " ".join(map(str, f.indices)) + f" {f.variant}")
        elif f.kind == "M":
            flat = " ".join(f"{i} {j} {t}" for i, j, t in f.pairs)
            lines.append("M " + flat)
        elif f.kind == "SHEAR":
            i, j = f.indices
            lines.append(f"SHEAR {i} {j} {f.side} {_coeff_token(f.coeff)}")
        elif f.kind == "SCALE":
            (i,) = f.indices
            lines.append(f"SCALE {i} {int(f.pow2)} {_coeff_token(f.coeff)}")
        else:
            raise ChainFormatError(f"cannot serialize factor kind {f.kind!r}")
    return "\n".join(lines) + "\n"


def save_chain(chain: TransformChain, path):
    with open(path, "w") as fh:
        fh.write(chain_to_text(chain))


def _parse_factor(parts, line_no) -> Factor:
    kind = parts[0]
    try:
        if kind in ("B", "O"):
            i, j, t = (int(v) for v in parts[1:4])
            return Factor(kind, (i, j), t)
        if kind == "H4":
            vals = [int(v) for v in parts[1:6]]
            return Factor("H4", tuple(vals[:4]), vals[4])
        if kind == "M":
            nums = [int(v) for v in parts[1:]]
            if not nums or len(nums) % 3:
                raise ChainFormatError("M record needs (i j t) triples", line_no)
            pairs = tuple(
                (nums[k], nums[k + 1], nums[k + 2]) for k in range(0, len(nums), 3)
            )
            return Factor("M", pairs=pairs)
        if kind == "SHEAR":
            i, j = int(parts[1]), int(parts[2])
            side = parts[3]
            coeff = _parse_coeff(parts[4], line_no)
            return Factor("SHEAR", (i, j), coeff=coeff, side=side)
        if kind == "SCALE":
            i = int(parts[1])
            pow2 = bool(int(parts[2]))
            coeff = _parse_coeff(parts[3], line_no)
            return Factor("SCALE", (i,), coeff=coeff, pow2=pow2)
    except ChainFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise ChainFormatError(f"malformed {kind} record", line_no) from exc
    except Exception as exc:
        raise ChainFormatError(str(exc), line_no) from exc
    raise ChainFormatError(f"unknown factor kind {kind!r}", line_no)


def chain_from_text(text: str) -> TransformChain:
    lines = text.splitlines()
    if not lines:
        raise ChainFormatError("empty file", 1)
    head = lines[0].split()
    if len(head) != 6 or head[0] != MAGIC or head[1] != VERSION:
        raise ChainFormatError("bad header", 1)
    try:
        fields = dict(kv.split("=", 1) for kv in head[2:])
        n = int(fields["n"])
        family = fields["family"]
        num, den = fields["scale_log2"].split("/")
        scale = Fraction(int(num), int(den))
        count = int(fields["factors"])
    except (KeyError, ValueError) as exc:
        raise ChainFormatError(f"bad header fields: {exc}", 1)
    factors = []
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        factors.append(_parse_factor(line.split(), line_no))
    if len(factors) != count:
        raise ChainFormatError(
            f"header promises {count} factors, found {len(factors)}",
            len(lines) + 1,
        )
    try:
        return TransformChain(n=n, factors=tuple(factors), scale_log2=scale, family=family)
    except Exception as exc:
        raise ChainFormatError(str(exc))


def load_chain(path) -> TransformChain:
    with open(path) as fh:
        return chain_from_text(fh.read())
