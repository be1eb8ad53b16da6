"""Regenerates the demo fixture: two small synthetic chat sources and the
scripted annotator responses for them.

Run from this directory: python3 generate.py
"""
import csv
import hashlib
import json

DE = [
    ("gg wp alle zusammen", "OTHER"),
    ("wer kommt mit zum drachen?", "OTHER"),
    ("du bist so ein noob, deinstallier das spiel", "OFFENSE"),
    ("heal bitte, ich sterbe", "OTHER"),
    ("halt die klappe du idiot", "OFFENSE"),
    ("nice shot!", "OTHER"),
    ("ich finde dich und dann gibts ärger", "OFFENSE"),
    ("mid ist offen", "OTHER"),
    ("lag ist heute schlimm", "OTHER"),
    ("ihr seid alle müll", "OFFENSE"),
    ("push jetzt", "OTHER"),
    ("danke fürs carry", "OTHER"),
    ("spiel wie ein mensch, du affe", "OFFENSE"),
    ("wir brauchen wards", "OTHER"),
    ("dieser patch ist kaputt", "OTHER"),
    ("hör auf zu feeden, vollidiot", "OFFENSE"),
    ("baron in 30 sekunden", "OTHER"),
    ("ruhig bleiben leute", "OTHER"),
    ("dumm wie brot, echt", "OFFENSE"),
    ("ff bei 20?", "OTHER"),
    ("wer hat den buff genommen", "OTHER"),
    ("du bist ein witz", "OFFENSE"),
    ("gute runde", "OTHER"),
    ("zurück zur base", "OTHER"),
    ("geh heulen, loser", "OFFENSE"),
]

PT = [
    ("bom jogo galera", 0),
    ("alguém tem poção?", 0),
    ("você é um lixo, desinstala", 1),
    ("vamos no boss", 0),
    ("cala a boca seu idiota", 1),
    ("boa jogada", 0),
    ("time de noobs", 1),
    ("espera o respawn", 0),
    ("que lag horrível", 0),
    ("seu burro, para de morrer", 1),
    ("cura aqui por favor", 0),
    ("valeu pelo apoio", 0),
    ("joga direito, animal", 1),
    ("precisamos de mais dano", 0),
    ("esse mapa é ruim", 0),
    ("otário do caramba", 1),
    ("última partida hoje", 0),
    ("calma pessoal", 0),
    ("vai chorar no canto", 1),
    ("alguém pra duo?", 0),
    ("cuidado no flanco", 0),
    ("você é uma piada", 1),
    ("gg", 0),
    ("recua recua", 0),
    ("inútil demais", 1),
]


def make_id(source, ordinal, text, context):
    content = "".join(line + "\x1f" for line in context) + "\x1e" + text
    digest = hashlib.sha256(content.encode("utf-8")).hexdigest()
    return f"{source}-{ordinal:07d}-{digest[:12]}"


def toxic_body(span, category):
    return json.dumps(
        {"overall_category": "toxic", "spans": [{"text": span, "category": [category]}]},
        ensure_ascii=False,
    )


NON_TOXIC = '{"overall_category": "non-toxic"}'


def script(i, text, human_toxic):
    """Scripted annotator behaviour for the i-th record of a source."""
    kind = i % 10
    if kind == 3:
        # Disagreement: the annotator flips the human label.
        return {"body_text": NON_TOXIC if human_toxic else toxic_body(text, "Insults")}
    if kind == 5:
        return {"body_text": "I cannot classify this line."}
    if kind == 7:
        return {"body_text": '{"overall_category": "toxic"}'}  # toxic without spans
    if kind == 8:
        return {"permanent_failure": True}
    row = {"body_text": toxic_body(text, "Insults") if human_toxic else NON_TOXIC}
    if kind == 1:
        row["fail_attempts"] = 1  # recovers on the retry
    if kind == 6:
        row["body_text"] = "Sure!\n```json\n" + row["body_text"] + "\n```"
    return row


def main():
    rows = []
    with open("de_chat.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["message", "label", "history"])
        prev = []
        for i, (text, label) in enumerate(DE):
            context = prev[-2:]
            w.writerow([text, label, json.dumps(context, ensure_ascii=False)])
            rid = make_id("DE_CHAT", i + 1, text, context)
            rows.append({"record_id": rid, **script(i, text, label == "OFFENSE")})
            prev.append(text)
    with open("pt_chat.jsonl", "w", encoding="utf-8") as f:
        for i, (text, label) in enumerate(PT):
            f.write(json.dumps({"text": text, "toxic": label}, ensure_ascii=False) + "\n")
            rid = make_id("PT_CHAT", i + 1, text, [])
            rows.append({"record_id": rid, **script(i, text, label == 1)})
    # One record has no scripted row at all; the mock's fallback fails it.
    rows = [r for r in rows if not r["record_id"].startswith("PT_CHAT-0000025-")]
    with open("mock_responses.jsonl", "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    main()
