"""Regenerate the packaged .bnf grammar files from their builders.

The shipped files are what users edit or replace; this script exists so the
repository's copies provably match the in-code builders (a consistency test
compares them).
"""

from pathlib import Path

from optevo.grammar import alr_grammar_text, dlr_grammar_text, parse_grammar


def main():
    out_dir = Path(__file__).resolve().parent.parent / "src" / "optevo" / "grammars"
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in [("alr", alr_grammar_text()), ("dlr", dlr_grammar_text())]:
        parse_grammar(text)  # refuse to write anything unparseable
        path = out_dir / f"{name}.bnf"
        path.write_text(text, encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
