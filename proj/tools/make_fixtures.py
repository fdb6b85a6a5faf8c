#!/usr/bin/env python3
"""Generate the synthetic annotation corpus and companion files under tests/fixtures.

Output is deterministic for a given seed:
  gt_fixtures.json           annotation corpus (60 pages)
  gt_manifest.json           expected corpus statistics, counted independently
  dangling_affiliation.json  one page whose caption points at a missing block
  pred_identity.jsonl        {"page_id", "markdown"}: each page's body as markdown
  pred_noisy.jsonl           same, with typos, re-segmentation, reordering and drops
  block_preds.jsonl          {"page_id", "block_id", "content"} for the direct tasks
  detections.jsonl           layout detections: jittered GT boxes plus false positives
"""

import argparse
import json
import random
from collections import Counter
from pathlib import Path

PDF_TYPES = ["book", "slides", "research_report", "colorful_textbook", "exam_paper",
             "magazine", "academic_literature", "notes", "newspaper"]
LAYOUTS = ["single_column", "double_column", "three_column", "one_and_more_mixed", "complex"]
LANGS = ["en", "zh", "mixed"]
ISSUES = ["fuzzy_scan", "watermark", "colorful_background"]
BACKGROUNDS = ["white", "single_color", "multi_color"]
ROTATIONS = ["normal", "rotate90", "rotate270", "horizontal"]
FRAMES = ["full", "omission", "three_line", "zero"]

EN_WORDS = ("the model reads each page and writes structured output for text tables and formulas while "
            "layout analysis finds regions in reading order before recognition merges results into markdown "
            "evaluation compares predictions against careful annotations across many document types").split()
ZH_CHARS = "文档解析评估基准包含多种页面类型表格公式文本阅读顺序布局检测识别结果标注数据模型输出"

FORMULAS = [
    r"\frac{a}{b} = c",
    r"E = m c^{2}",
    r"\sum_{i=1}^{n} x_{i} = S",
    r"\int_{0}^{1} f(x) \, dx",
    r"a^{2} + b^{2} = c^{2}",
    r"\alpha + \beta \leq \gamma",
    r"\sqrt{x + y} \geq 0",
    r"\lim_{n \to \infty} \frac{1}{n} = 0",
]

CODE = [
    "def add(a, b):\n    return a + b",
    "for i in range(3):\n    print(i)",
    "int main() {\n  return 0;\n}",
]


def sentence(rng, lang, words):
    if lang == "zh":
        return "".join(rng.choice(ZH_CHARS) for _ in range(words * 2)) + "。"
    text = " ".join(rng.choice(EN_WORDS) for _ in range(words))
    if lang == "mixed":
        text += " " + "".join(rng.choice(ZH_CHARS) for _ in range(4))
    return text[0].upper() + text[1:] + "."


def paragraph(rng, lang):
    parts = [sentence(rng, lang, rng.randint(6, 14)) for _ in range(rng.randint(1, 3))]
    if lang != "zh" and rng.random() < 0.25:
        parts.insert(1, "with $x^{2}$ inline")
    return " ".join(parts)


def html_table(rng, merge):
    rows, cols = rng.randint(2, 4), rng.randint(2, 4)
    out = ["<table>"]
    header = "".join(f"<th>H{c}</th>" for c in range(cols))
    out.append(f"<tr>{header}</tr>")
    for r in range(rows):
        cells = [f"<td>{rng.choice(EN_WORDS)} {r}{c}</td>" for c in range(cols)]
        if merge and r == 0 and cols >= 2:
            cells = [f'<td colspan="2">merged {r}</td>'] + cells[2:]
        out.append("<tr>" + "".join(cells) + "</tr>")
    out.append("</table>")
    return "".join(out)


class PageBuilder:
    def __init__(self, rng, page_id, attrs):
        self.rng = rng
        self.page = {"page_id": page_id, "attributes": attrs, "blocks": []}
        self.order = 0
        self.y = 60.0

    def next_box(self, height):
        box = [50.0, self.y, 550.0, self.y + height]
        self.y += height + 8
        return box

    def add(self, category, content=None, ordered=True, height=40.0, **extra):
        block = {
            "id": f"b{len(self.page['blocks'])}",
            "category": category,
            "bbox": self.next_box(height),
            "content": content,
            "order": self.order if ordered else None,
        }
        if ordered:
            self.order += 1
        block.update(extra)
        self.page["blocks"].append(block)
        return block


def text_attributes(rng, lang):
    return {"language": lang if lang != "mixed" else rng.choice(LANGS),
            "background": rng.choice(BACKGROUNDS),
            "rotation": rng.choice(ROTATIONS) if rng.random() < 0.2 else "normal"}


def spans_for(rng, bbox, with_inline):
    x0, y0, x1, y1 = bbox
    spans = [{"category": "text_span", "bbox": [x0 + 2, y0 + 2, x1 - 2, y1 - 2], "content": "run"}]
    if with_inline:
        spans.append({"category": "equation_inline", "bbox": [x0 + 10, y0 + 4, x0 + 60, y1 - 4],
                      "content": "x^{2}"})
    if rng.random() < 0.1:
        spans.append({"category": "footnote_mark", "bbox": [x1 - 12, y0 + 2, x1 - 4, y0 + 10], "content": "1"})
    return spans


def build_page(rng, index):
    lang = LANGS[index % 3]
    issues = sorted(rng.sample(ISSUES, rng.choice([0, 0, 1, 1, 2])))
    attrs = {"pdf_type": PDF_TYPES[index % len(PDF_TYPES)], "layout_type": LAYOUTS[index % len(LAYOUTS)],
             "language": lang, "special_issues": issues}
    pb = PageBuilder(rng, f"page_{index:03d}.jpg", attrs)

    pb.add("header", f"Running header {index}", ordered=False, height=14)
    title = sentence(rng, lang, 4).rstrip(".。")
    if rng.random() < 0.5:
        title = "# " + title
    pb.add("title", title, text_attributes=text_attributes(rng, lang), height=24)

    for k in range(rng.randint(2, 5)):
        content = paragraph(rng, lang)
        block = pb.add("text_block", content, text_attributes=text_attributes(rng, lang), height=60)
        block["spans"] = spans_for(rng, block["bbox"], "$" in content)
        if k == 0 and rng.random() < 0.5:
            formula = rng.choice(FORMULAS)
            pb.add("equation_isolated", formula, height=30)

    if rng.random() < 0.6:
        merge = rng.random() < 0.4
        table = pb.add("table", html_table(rng, merge), height=120,
                       table_attributes={"language": lang, "frame": rng.choice(FRAMES), "merge_cell": merge,
                                         "contains_formula": False,
                                         "colorful_background": rng.random() < 0.2,
                                         "rotated": rng.random() < 0.1})
        pb.add("table_caption", f"Table {index}: summary", ordered=False, height=14,
               affiliation=table["id"])
    if rng.random() < 0.4:
        figure = pb.add("figure", None, height=150)
        pb.add("figure_caption", f"Figure {index}: overview", ordered=False, height=14,
               affiliation=figure["id"])
    if rng.random() < 0.2:
        pb.add("code_block", rng.choice(CODE), height=50)
    if rng.random() < 0.3:
        pb.add("reference", f"[{index}] A. Author. A study of documents. {2000 + index}.",
               text_attributes=text_attributes(rng, "en"), height=20)
    if rng.random() < 0.2:
        pb.add("masked_text_block", None, ordered=False, height=20)
    pb.add("page_footnote", f"Footnote text {index}", ordered=False, height=14)
    pb.add("footer", f"Footer {index}", ordered=False, height=14)
    pb.add("page_number", str(index + 1), ordered=False, height=12)
    return pb.page


def body_markdown(page):
    body = [b for b in page["blocks"] if b["order"] is not None]
    body.sort(key=lambda b: b["order"])
    pieces = []
    for b in body:
        if b["category"] == "figure":
            continue
        if b["category"] == "equation_isolated":
            pieces.append("$$" + b["content"] + "$$")
        elif b["category"] == "code_block":
            pieces.append("```\n" + b["content"] + "\n```")
        else:
            pieces.append(b["content"])
    return "\n\n".join(pieces)


def typo(rng, text, edits):
    chars = list(text)
    for _ in range(edits):
        if not chars:
            break
        pos = rng.randrange(len(chars))
        op = rng.random()
        if op < 0.4:
            chars[pos] = rng.choice("abcdefghijklmnopqrstuvwxyz")
        elif op < 0.7:
            del chars[pos]
        else:
            chars.insert(pos, rng.choice("abcdefghijklmnopqrstuvwxyz"))
    return "".join(chars)


def noisy_markdown(rng, page):
    body = sorted((b for b in page["blocks"] if b["order"] is not None), key=lambda b: b["order"])
    pieces = []
    for b in body:
        cat, content = b["category"], b["content"]
        if cat == "figure":
            pieces.append("![figure](img.png)")
            continue
        if rng.random() < 0.08:
            continue  # dropped
        if cat == "equation_isolated":
            pieces.append("$$" + typo(rng, content, rng.randint(0, 2)) + "$$")
        elif cat == "code_block":
            pieces.append("```\n" + content + "\n```")
        elif cat == "table":
            pieces.append(content.replace("<th>", "<td>").replace("</th>", "</td>") if rng.random() < 0.5
                          else typo(rng, content, 3))
        else:
            text = typo(rng, content, rng.randint(0, 3))
            words = text.split(" ")
            if len(words) > 8 and rng.random() < 0.3:
                cut = len(words) // 2
                pieces.append(" ".join(words[:cut]))
                pieces.append(" ".join(words[cut:]))
            else:
                pieces.append(text)
    if len(pieces) > 3 and rng.random() < 0.3:
        i = rng.randrange(len(pieces) - 1)
        pieces[i], pieces[i + 1] = pieces[i + 1], pieces[i]
    if rng.random() < 0.2:
        pieces.insert(0, "Running header noise")
    return "\n\n".join(pieces)


def manifest(pages):
    tables = {
        "pdf_type": Counter(), "layout_type": Counter(), "language": Counter(), "special_issues": Counter(),
        "block_category": Counter(), "span_category": Counter(), "text_language": Counter(),
        "text_background": Counter(), "text_rotation": Counter(), "table_language": Counter(),
        "table_frame": Counter(), "table_special": Counter(),
    }
    blocks = spans = 0
    for p in pages:
        a = p["attributes"]
        tables["pdf_type"][a["pdf_type"]] += 1
        tables["layout_type"][a["layout_type"]] += 1
        tables["language"][a["language"]] += 1
        for s in a["special_issues"] or ["none"]:
            tables["special_issues"][s] += 1
        for b in p["blocks"]:
            blocks += 1
            tables["block_category"][b["category"]] += 1
            for s in b.get("spans", []):
                spans += 1
                tables["span_category"][s["category"]] += 1
            ta = b.get("text_attributes")
            if ta:
                tables["text_language"][ta["language"]] += 1
                tables["text_background"][ta["background"]] += 1
                tables["text_rotation"][ta["rotation"]] += 1
            tb = b.get("table_attributes")
            if tb:
                tables["table_language"][tb["language"]] += 1
                tables["table_frame"][tb["frame"]] += 1
                for flag in ("merge_cell", "contains_formula", "colorful_background", "rotated"):
                    if tb[flag]:
                        tables["table_special"][flag] += 1
    return {"pages": len(pages), "blocks": blocks, "spans": spans,
            "tables": {name: dict(sorted(c.items())) for name, c in tables.items()}}


def detections(rng, pages):
    out = []
    for p in pages:
        for b in p["blocks"]:
            if b["category"] in ("masked_text_block", "other_abandoned", "organic_chemical_formula"):
                continue
            if rng.random() < 0.1:
                continue
            x0, y0, x1, y1 = (round(v + rng.uniform(-3, 3), 1) for v in b["bbox"])
            out.append({"page_id": p["page_id"], "category": b["category"],
                        "bbox": [min(x0, x1 - 1), min(y0, y1 - 1), x1, y1],
                        "confidence": round(rng.uniform(0.5, 1.0), 2)})
        for _ in range(rng.randint(0, 2)):
            out.append({"page_id": p["page_id"], "category": rng.choice(["text_block", "figure", "table"]),
                        "bbox": [600.0, 700.0, 700.0, 760.0], "confidence": round(rng.uniform(0.05, 0.6), 2)})
    return out


def block_predictions(rng, pages):
    out = []
    for p in pages:
        for b in p["blocks"]:
            if b["category"] not in ("text_block", "title", "reference", "table", "equation_isolated"):
                continue
            if b["content"] is None or rng.random() < 0.05:
                continue
            content = b["content"] if b["category"] == "table" else typo(rng, b["content"], rng.randint(0, 2))
            out.append({"page_id": p["page_id"], "block_id": b["id"], "content": content})
    return out


def dangling_fixture():
    return [{
        "page_id": "dangling.jpg",
        "attributes": {"pdf_type": "book", "layout_type": "single_column", "language": "en", "special_issues": []},
        "blocks": [
            {"id": "b0", "category": "text_block", "bbox": [10, 10, 200, 40], "content": "Body text.", "order": 0,
             "text_attributes": {"language": "en", "background": "white", "rotation": "normal"}},
            {"id": "b1", "category": "figure_caption", "bbox": [10, 50, 200, 60], "content": "Figure 1",
             "order": None, "affiliation": "b9"},
        ],
    }]


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "tests" / "fixtures"))
    ap.add_argument("--pages", type=int, default=60)
    ap.add_argument("--seed", type=int, default=20241)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    pages = [build_page(rng, i) for i in range(args.pages)]

    def dump(name, obj):
        (out / name).write_text(json.dumps(obj, ensure_ascii=False, indent=1, sort_keys=True) + "\n",
                                encoding="utf-8")

    dump("gt_fixtures.json", pages)
    dump("gt_manifest.json", manifest(pages))
    dump("dangling_affiliation.json", dangling_fixture())
    write_jsonl(out / "pred_identity.jsonl", [{"page_id": p["page_id"], "markdown": body_markdown(p)} for p in pages])
    noise = random.Random(args.seed + 1)
    write_jsonl(out / "pred_noisy.jsonl", [{"page_id": p["page_id"], "markdown": noisy_markdown(noise, p)}
                                           for p in pages if noise.random() > 0.03])
    write_jsonl(out / "block_preds.jsonl", block_predictions(random.Random(args.seed + 2), pages))
    write_jsonl(out / "detections.jsonl", detections(random.Random(args.seed + 3), pages))


if __name__ == "__main__":
    main()
