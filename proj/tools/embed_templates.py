#!/usr/bin/env python3
"""Regenerates include/aigs/builtin_templates.hpp from templates/*.txt."""
import pathlib

root = pathlib.Path(__file__).resolve().parent.parent
entries = []
for path in sorted((root / "templates").glob("*.txt")):
    text = path.read_text(encoding="utf-8")
    assert ')tmpl"' not in text
    entries.append(f'      {{"{path.stem}", R"tmpl({text})tmpl"}},')

out = """#pragma once

// Default prompt templates. Mirrors templates/*.txt.

#include <map>
#include <string>

namespace aigs::agents {

inline const std::map<std::string, std::string>& builtin_templates() {
  static const std::map<std::string, std::string> texts = {
%s
  };
  return texts;
}

}  // namespace aigs::agents
""" % "\n".join(entries)
(root / "include/aigs/builtin_templates.hpp").write_text(out, encoding="utf-8")
