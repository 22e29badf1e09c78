#!/usr/bin/env python3
"""Regenerates the fixture corpus under fixtures/.

Writes a 16-sample corpus (two per category), an answers directory, a mock
judge fixture keyed by "<sample id>/<stage>" aliases, and the end-to-end
agent fixture. Output is deterministic; rerun after editing the tables below.
"""

import json
import pathlib
import struct
import zlib

ROOT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def png(rgb, size=8):
    def chunk(kind, data):
        body = kind + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    raw = b"".join(b"\x00" + bytes(rgb) * size for _ in range(size))
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", struct.pack(">IIBBBBB", size, size, 8, 2, 0, 0, 0))
            + chunk(b"IDAT", zlib.compress(raw, 9)) + chunk(b"IEND", b""))


def write(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, (dict, list)):
        path.write_text(json.dumps(data, indent=2, ensure_ascii=False) + "\n")
    else:
        path.write_bytes(data)


# id, category, subcategory, query layout, golden layout, answer kind, prompt
# Layout letters: T text, I image. Answer kinds: match, mismatch, missing.
SAMPLES = [
    ("st-art-001", "Style Transfer", "Art Style Transfer", "TI", "IT", "match",
     "Repaint the attached photo in the style of a woodblock print, then explain the changes in one paragraph."),
    ("st-photo-002", "Style Transfer", "Photo Variation", "TI", "ITIT", "match",
     "Produce two variations of the attached street photo, one at dawn and one at night, each followed by a short caption."),
    ("dec-real-001", "Image Decomposition", "Realistic Image Object Decomposition", "TI", "TITIT", "match",
     "Describe the attached kitchen scene, then show the kettle and the mug separately, each with a caption below it."),
    ("dec-sem-002", "Image Decomposition", "Semantic Decomposition", "TI", "ITIT", "mismatch",
     "Split the attached landscape into sky and ground regions and show each region followed by a description."),
    ("3d-obj-001", "3D Scene Transformation", "Multi-Angle Object Generation", "TI", "IIIT", "match",
     "Show the attached ceramic teapot from the left, the back and the right, then summarize its shape in one paragraph."),
    ("3d-view-002", "3D Scene Transformation", "Multi-view Scene Generation", "TI", "ITIT", "match",
     "Render the attached courtyard from a bird's-eye view and from street level, each followed by a caption."),
    ("pit-text-001", "Progressive Image Transformation", "Text-guided Animation", "T", "ITITIT", "match",
     "Generate three images of a paper boat slowly unfolding into a flat sheet, each followed by a one-line description."),
    ("pit-attr-002", "Progressive Image Transformation", "Attribute-guided Image Generation", "TI", "ITIT", "mismatch",
     "Age the attached wooden chair in two stages, first weathered and then broken, each with a caption."),
    ("tp-sim-001", "Temporal Prediction", "Real-world Simulation", "TI", "ITIT", "match",
     "Predict how the attached melting snowman looks after one hour and after three hours, with a caption for each."),
    ("tp-paint-002", "Temporal Prediction", "Painting Process Generation", "TI", "ITITIT", "match",
     "Show three intermediate stages of painting the attached still life, each followed by the step being performed."),
    ("itc-howto-001", "Image-Text Complementation", "HowTo", "T", "TITI", "match",
     "How do I repot a small cactus? Give two steps, each as a text instruction followed by an illustrating image."),
    ("itc-sci-002", "Image-Text Complementation", "Scientific Phenomenon Explanation", "T", "TIT", "missing",
     "Explain why the sky turns red at sunset with one diagram between two paragraphs."),
    ("vst-img-001", "Visual Story Telling", "Image-based Visual Storytelling", "TI", "ITIT", "match",
     "Continue the story that starts with the attached picture of a lighthouse keeper, in two illustrated beats with text after each image."),
    ("vst-txt-002", "Visual Story Telling", "Text-based Visual Storytelling", "T", "TITI", "mismatch",
     "Tell a two-part story about a fox who learns to fish, each part a paragraph followed by an illustration."),
    ("vqa-obj-001", "VQA with Image Generation", "Object Q&A and Explanation", "TI", "TI", "match",
     "What instrument is shown in the attached picture? Answer in text and then draw a simplified diagram of it."),
    ("vqa-hist-002", "VQA with Image Generation", "Historical Event/Artifact Analysis", "T", "TIT", "match",
     "What was the Antikythera mechanism used for? Explain, include one reconstruction image, then add a closing remark."),
]

REQUIREMENT = {
    "Style Transfer": ("VISION", "FULL"),
    "Image Decomposition": ("VISION", "FULL"),
    "3D Scene Transformation": ("VISION", "FULL"),
    "Progressive Image Transformation": ("VISION", "HALF"),
    "Temporal Prediction": ("BOTH", "HALF"),
    "Image-Text Complementation": ("BOTH", "EMPTY"),
    "Visual Story Telling": ("BOTH", "EMPTY"),
    "VQA with Image Generation": ("LANGUAGE", "EMPTY"),
}

# Scripted block scores per sample (score mode); cycled over questions.
BLOCK_SCORES = {
    "st-art-001": [8], "st-photo-002": [7, 9], "dec-real-001": [6, 8, 9],
    "3d-obj-001": [5, 7], "3d-view-002": [9, 10], "pit-text-001": [8, 6, 7],
    "tp-sim-001": [7], "tp-paint-002": [4, 6, 8], "itc-howto-001": [9, 8],
    "vst-img-001": [6, 7], "vqa-obj-001": [9], "vqa-hist-002": [8],
}
# Sample-specific image VQA answers (question id -> Yes/No); default Yes.
IMAGE_NO = {"st-photo-002": {0}, "3d-obj-001": {1}, "tp-paint-002": {2}}
HOLISTIC = {
    "st-art-001": 7, "st-photo-002": 6, "dec-real-001": 8, "dec-sem-002": 3, "3d-obj-001": 5,
    "3d-view-002": 7, "pit-text-001": 8, "pit-attr-002": 2, "tp-sim-001": 6, "tp-paint-002": 7,
    "itc-howto-001": 9, "vst-img-001": 6, "vst-txt-002": 4, "vqa-obj-001": 8, "vqa-hist-002": 7,
}


def tokens(layout, scope):
    counts = {"T": 0, "I": 0}
    out = []
    for c in layout:
        counts[c] += 1
        out.append(f"<{scope}_{'text' if c == 'T' else 'img'}{counts[c]}>")
    return out


def color(sample_id, slot):
    h = zlib.crc32(f"{sample_id}:{slot}".encode())
    return (h & 0xFF, (h >> 8) & 0xFF, (h >> 16) & 0xFF)


def blocks(layout, sample_id, role, texts, image_dir, rel):
    out, ti, ii = [], 0, 0
    for c in layout:
        if c == "T":
            out.append({"type": "text", "content": texts[ti % len(texts)] + ("" if ti < len(texts) else f" ({ti})")})
            ti += 1
        else:
            ii += 1
            name = f"{sample_id}-{role}-{ii}.png"
            write(image_dir / name, png(color(sample_id, f"{role}{ii}")))
            out.append({"type": "image", "path": f"{rel}/{name}"})
    return out


def mismatched(layout):
    swapped = layout[::-1]
    return swapped if swapped != layout else layout + "T"


def block_plan(q_layout, a_layout):
    """Relation triplets and questions tying answer texts to adjacent images."""
    a_tok = tokens(a_layout, "gen")
    q_tok = tokens(q_layout, "query")
    rels, qs = [], []
    for i, tok in enumerate(a_tok):
        if "img" not in tok:
            continue
        text = next((a_tok[j] for j in (i + 1, i - 1) if 0 <= j < len(a_tok) and "text" in a_tok[j]), None)
        if text:
            rels.append([text, tok, "describes"])
            qs.append({"subject": text, "object": tok, "relation": "describes",
                       "Question": f"Does {text} accurately describe this image?"})
    q_img = [t for t in q_tok if "img" in t]
    first_gen = next((t for t in a_tok if "img" in t), None)
    if q_img and first_gen:
        rels.append([first_gen, q_img[0], "keeps the main subject of"])
        qs.append({"subject": first_gen, "object": q_img[0], "relation": "keeps the main subject of",
                   "Question": "Does the first image keep the main subject of the second image?"})
    return rels[:4], qs[:4]


def image_plan(a_layout, sample_id):
    a_imgs = [t for t in tokens(a_layout, "gen") if "img" in t][:2]
    tuples, qs = [], []
    for k, img in enumerate(a_imgs):
        obj = f"{sample_id} " + ["subject", "scene"][k % 2] + f" {k + 1}"
        base = len(qs)
        tuples += [["entity", obj, img], ["attribute", "well lit", obj, img]]
        qs += [{"image": img, "Question": f"Is the {obj} visible?", "id": base, "Preliminary": []},
               {"image": img, "Question": f"Is the {obj} well lit?", "id": base + 1,
                "Preliminary": [base]}]
    return tuples, qs


def holistic(score):
    dims = ["Coherence", "Content Accuracy", "Relevance and Responsiveness", "Visual-Textual Alignment",
            "Creativity and Originality"]
    out = {"Analysis": "Scripted judgment for fixture runs."}
    for d in dims:
        out[d] = {"Score": score, "Explanation": "fixture"}
    out["Overall Score"] = score
    return out


def main():
    corpus = ROOT / "corpus"
    answers = ROOT / "answers"
    mock = {
        "*/block/vqa/score/*": {"reply": {"Judge": 7, "Reason": "default"}},
        "*/block/vqa/yesno/*": {"reply": {"Judge": "Yes", "Reason": "default"}},
        "*/image/vqa/*": {"reply": {"Judge": "Yes", "Reason": "default"}},
    }
    for sid, cat, sub, q_layout, g_layout, kind, prompt in SAMPLES:
        modality, req = REQUIREMENT[cat]
        query = blocks(q_layout, sid, "query", [prompt], corpus / "images", "../images")
        golden_texts = [f"Reference text {i + 1} for {sub.lower()}." for i in range(6)]
        golden = blocks(g_layout, sid, "golden", golden_texts, corpus / "images", "../images")
        write(corpus / "samples" / f"{sid}.json",
              {"id": sid, "category": cat, "subcategory": sub, "modality_class": modality,
               "image_requirement": req, "query": {"blocks": query}, "golden": {"blocks": golden}})

        a_layout = g_layout if kind != "mismatch" else mismatched(g_layout)
        if kind != "missing":
            texts = [f"Answer text {i + 1} for sample {sid}." for i in range(6)]
            write(answers / f"{sid}.json", {"blocks": blocks(a_layout, sid, "answer", texts, answers, ".")})

        mock[f"{sid}/structure"] = {"reply": {
            "Thought": "layout requested by the query",
            "Query": tokens(q_layout, "query"), "Answer": tokens(g_layout, "gen")}}
        rels, qs = block_plan(q_layout, g_layout)
        mock[f"{sid}/block/extract"] = {"reply": {"relation": rels}}
        mock[f"{sid}/block/questions"] = {"reply": qs}
        scores = BLOCK_SCORES.get(sid)
        if scores:
            for i in range(len(qs)):
                mock[f"{sid}/block/vqa/score/{i}"] = {"reply": {"Judge": scores[i % len(scores)],
                                                                "Reason": "scripted"}}
                mock[f"{sid}/block/vqa/yesno/{i}"] = {"reply": {
                    "Judge": "Yes" if scores[i % len(scores)] >= 7 else "No", "Reason": "scripted"}}
        if req != "EMPTY":
            tuples, iq = image_plan(g_layout, sid)
            mock[f"{sid}/image/extract"] = {"reply": {"tuple": tuples}}
            mock[f"{sid}/image/questions"] = {"reply": iq}
            for q in IMAGE_NO.get(sid, set()):
                mock[f"{sid}/image/vqa/{q}"] = {"reply": {"Judge": "No", "Reason": "scripted"}}
        if sid in HOLISTIC:
            mock[f"{sid}/holistic"] = {"reply": holistic(HOLISTIC[sid])}

    write(ROOT / "mock.json", {"responses": mock})
    write(ROOT / "backend.json", {"kind": "mock", "fixture": "mock.json", "cache": False})
    make_e2e()


def make_e2e():
    e2e = ROOT / "e2e"
    sid = "e2e-anim-001"
    prompt = ("Generate 4 images each followed by a description, showing a candle burning down "
              "from a fresh wick to a puddle of wax.")
    golden = [{"type": "text", "content": f"Golden stage {i + 1} of the candle."} for i in range(4)]
    golden_blocks = []
    for i, t in enumerate(golden):
        name = f"{sid}-golden-{i + 1}.png"
        write(e2e / "corpus" / "images" / name, png(color(sid, i)))
        golden_blocks += [{"type": "image", "path": f"../images/{name}"}, t]
    sample = {"id": sid, "category": "Progressive Image Transformation", "subcategory": "Text-guided Animation",
              "query": {"blocks": [{"type": "text", "content": prompt}]}, "golden": {"blocks": golden_blocks}}
    write(e2e / "corpus" / "samples" / f"{sid}.json", sample)
    write(e2e / "query.json", {"blocks": [{"type": "text", "content": prompt}]})

    stages = ["a fresh candle with a tall wick", "the candle burnt to two thirds",
              "the candle burnt to one third", "a puddle of cooled wax"]
    steps = []
    for i, s in enumerate(stages):
        steps.append({"Step": i + 1, "Task": "Call_tool",
                      "Input_text": f"Generate an image of {s} on a wooden table, warm light.",
                      "Input_images": [], "Output": "<WAIT>"})
    n = len(steps)
    for i, s in enumerate(stages):
        steps.append({"Step": n + 2 * i + 1, "Task": "AddImage", "Input_images": [f"<GEN_{i}>"]})
        steps.append({"Step": n + 2 * i + 2, "Task": "Caption",
                      "Input_text": f"Describe stage {i + 1} of the candle burning down.",
                      "Input_images": [f"<GEN_{i}>"], "Output": "<WAIT>"})
    smooth = "\n".join(f"<boi><eoi>\nStage {i + 1}: {s}, told as one smooth sentence." for i, s in enumerate(stages))
    mock = {
        "agent/plan": {"reply": [{"ID": "0000", "Plan": steps}]},
        "agent/caption/*": "The candle at this stage of burning.",
        "agent/smooth": smooth,
        f"{sid}/structure": {"reply": {"Query": ["<query_text1>"],
                                       "Answer": [t for k in range(1, 5) for t in (f"<gen_img{k}>", f"<gen_text{k}>")]}},
        f"{sid}/block/extract": {"reply": {"relation": [[f"<gen_text{k}>", f"<gen_img{k}>", "describes"]
                                                        for k in range(1, 5)]}},
        f"{sid}/block/questions": {"reply": [{"subject": f"<gen_text{k}>", "object": f"<gen_img{k}>",
                                              "relation": "describes",
                                              "Question": f"Does <gen_text{k}> describe this image?"}
                                             for k in range(1, 5)]},
        "*/block/vqa/score/*": {"reply": {"Judge": 10, "Reason": "scripted maximum"}},
        "*/block/vqa/yesno/*": {"reply": {"Judge": "Yes", "Reason": "scripted maximum"}},
        f"{sid}/image/extract": {"reply": {"tuple": [x for k in range(1, 5) for x in (
            ["entity", "candle", f"<gen_img{k}>"], ["attribute", "burning", "candle", f"<gen_img{k}>"])]}},
        f"{sid}/image/questions": {"reply": [x for k in range(4) for x in (
            {"image": f"<gen_img{k + 1}>", "Question": "Is there a candle?", "id": 2 * k, "Preliminary": []},
            {"image": f"<gen_img{k + 1}>", "Question": "Is the candle burning?", "id": 2 * k + 1,
             "Preliminary": [2 * k]})]},
        "*/image/vqa/*": {"reply": {"Judge": "Yes", "Reason": "scripted maximum"}},
        f"{sid}/holistic": {"reply": holistic(10)},
    }
    write(e2e / "mock.json", {"responses": mock})
    write(e2e / "backend.json", {"kind": "mock", "fixture": "mock.json", "cache": False})
    (e2e / "tools.toml").write_text(
        "[tools]\nbackend = \"mock\"\nwidth = 16\nheight = 16\n\n"
        "# Endpoints are only read when backend = \"http\".\n"
        "[tools.ImageGeneration]\nendpoint = \"http://127.0.0.1:9001/generate\"\n\n"
        "[tools.ImageEdit]\nendpoint = \"http://127.0.0.1:9002/edit\"\n")


if __name__ == "__main__":
    main()
