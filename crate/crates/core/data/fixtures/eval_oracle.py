"""Brute-force recount of top-k accuracy for the 20-sample eval fixture.

Reads the gold samples and the frozen ranked predictions, matches them with
Python's own expression parser, and writes eval20.expected.json.
"""
import ast
import json
from pathlib import Path

HERE = Path(__file__).parent


def value(node):
    if isinstance(node, ast.Constant):
        v = node.value
        if isinstance(v, bool):
            return ("bool", v)
        if v is None:
            return ("none",)
        if isinstance(v, (int, float)):
            return ("num", float(v))
        return ("str", v)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, ast.USub):
        kind, v = value(node.operand)
        return (kind, -v)
    if isinstance(node, ast.Name):
        return ("mask",) if node.id == "MASK" else ("ref", node.id)
    if isinstance(node, ast.Attribute):
        return ("ref", ast.unparse(node))
    raise ValueError(ast.dump(node))


def calls(text):
    out = []
    for stmt in ast.parse(text).body:
        call = stmt.value
        args = {f"pos{i}": value(a) for i, a in enumerate(call.args)}
        args.update({k.arg: value(k.value) for k in call.keywords})
        out.append((call.func.id, args))
    return out


def hit(candidates, gold, k, mode):
    for cand in candidates[:k]:
        (op, args), = calls(cand)
        for g_op, g_args in gold:
            if op == g_op and (mode == "name" or args == g_args):
                return True
    return False


def main():
    gold = [json.loads(l) for l in (HERE / "eval20.test.jsonl").read_text().splitlines() if l.strip()]
    preds = json.loads((HERE / "eval20.predictions.json").read_text())
    assert len(gold) == len(preds) == 20
    expected = {}
    for mode in ("name", "invocation"):
        for k in (1, 5):
            hits = sum(
                hit(p["candidates"], calls(g["target"]), k, mode)
                for g, p in zip(gold, preds)
                if g["nl"] == p["query"]
            )
            expected[f"{mode}@{k}"] = {"hits": hits, "total": len(gold), "accuracy": hits / len(gold)}
    (HERE / "eval20.expected.json").write_text(json.dumps(expected, indent=2, sort_keys=True) + "\n")
    print(json.dumps(expected, sort_keys=True))


if __name__ == "__main__":
    main()
