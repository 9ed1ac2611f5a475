#!/usr/bin/env python3
# Copyright 2026  The pqr Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Prepend tools/license_header.txt to every source file that lacks it."""

import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent
DIRS = ["src", "include", "tests", "tools", "python"]
SLASH = {".cpp", ".hpp", ".h"}
HASH = {".py", ".sh", ".cmake", ".toml"}


def header(style):
    lines = (ROOT / "tools" / "license_header.txt").read_text().rstrip("\n").splitlines()
    if style == "#":
        lines = ["#" + ln[2:] if ln.startswith("//") else ln for ln in lines]
    return "\n".join(lines) + "\n"


def style_of(p):
    if p.suffix in SLASH:
        return "//"
    if p.suffix in HASH or p.name == "CMakeLists.txt":
        return "#"
    return None


def files():
    yield ROOT / "CMakeLists.txt"
    yield ROOT / "pyproject.toml"
    for d in DIRS:
        for p in sorted((ROOT / d).rglob("*")):
            if p.is_file() and style_of(p) and "__pycache__" not in p.parts:
                yield p


def main():
    check = "--check" in sys.argv
    missing = []
    for p in files():
        h = header(style_of(p))
        text = p.read_text()
        if h.splitlines()[0] in text.splitlines()[:3]:
            continue
        missing.append(p.relative_to(ROOT))
        if check:
            continue
        if text.startswith("#!"):
            first, _, rest = text.partition("\n")
            text = first + "\n" + h + "\n" + rest
        else:
            text = h + "\n" + text
        p.write_text(text)
    for m in missing:
        print(("missing: " if check else "added: ") + str(m))
    return 1 if check and missing else 0


if __name__ == "__main__":
    sys.exit(main())
