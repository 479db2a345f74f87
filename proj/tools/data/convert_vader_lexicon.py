#!/usr/bin/env python3
# Copyright 2026 The SDL Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Converts vader_lexicon.txt (vaderSentiment 3.3.2, MIT) to #sdl-lexicon v1.

Writes the full lexicon and a 600-entry mini lexicon. The mini lexicon keeps
the words the synthetic generator and the tests rely on, then fills up with
single alphabetic words ordered by rater disagreement (lowest std first).

  convert_vader_lexicon.py VADER_LEXICON OUT_DIR
"""

import sys

# Booster and negator words are handled by rules, never as valence entries.
RULE_WORDS = {
    "no", "not", "never", "none", "nope", "nor", "nothing", "nowhere",
    "neither", "without", "rarely", "seldom", "despite", "cannot",
    "absolutely", "amazingly", "awfully", "completely", "considerable",
    "considerably", "decidedly", "deeply", "enormous", "enormously",
    "entirely", "especially", "exceptional", "exceptionally", "extreme",
    "extremely", "fabulously", "fully", "greatly", "highly", "hugely",
    "incredible", "incredibly", "intensely", "major", "majorly", "more",
    "most", "particularly", "purely", "quite", "really", "remarkably", "so",
    "substantially", "thoroughly", "total", "totally", "tremendous",
    "tremendously", "unbelievably", "unusually", "utter", "utterly", "very",
    "almost", "barely", "hardly", "kinda", "less", "little", "marginal",
    "marginally", "occasional", "occasionally", "partly", "scarce",
    "scarcely", "slight", "slightly", "somewhat", "sorta",
}

REQUIRED = [
    "good", "great", "nice", "best", "friends", "luck", "wonderful", "happy",
    "help", "thanks", "thank", "patience", "sorry", "delay", "free", "kind",
    "ready", "approved", "congrats", "congratulations", "welcome", "clear",
    "interested", "forget", "fail", "failed", "failing", "please", "bad",
    "terrible", "awful", "love", "hate", "excellent", "awesome", "fantastic",
    "glad", "perfect", "amazing", "helpful", "problem", "wrong", "stuck",
    "broken", "worried", "confused", "annoying", "useless", "stupid",
    "easy", "hard", "sad", "angry", "fine", "like", "enjoy", "trouble",
]

HEADER = """#sdl-lexicon v1
# Converted from vader_lexicon.txt of vaderSentiment 3.3.2.
# Copyright (c) 2016 C.J. Hutto. MIT License; see data/VADER_LICENSE.txt.
"""


def main():
    src, out_dir = sys.argv[1], sys.argv[2]
    entries = []
    with open(src, encoding="utf-8") as f:
        for line in f:
            parts = line.rstrip("\n").split("\t")
            if len(parts) < 3:
                continue
            token, mean, std = parts[0], float(parts[1]), float(parts[2])
            if " " in token or token in RULE_WORDS:
                continue
            entries.append((token, mean, std))

    with open(f"{out_dir}/vader_lexicon.tsv", "w", encoding="utf-8") as f:
        f.write(HEADER)
        for token, mean, _ in entries:
            f.write(f"{token}\t{mean}\n")

    by_token = {t: (m, s) for t, m, s in entries}
    chosen = [t for t in REQUIRED if t in by_token]
    seen = set(chosen)
    rest = sorted((s, t) for t, m, s in entries if t.isalpha() and t not in seen)
    for _, t in rest:
        if len(chosen) >= 600:
            break
        chosen.append(t)
        seen.add(t)
    with open(f"{out_dir}/mini_lexicon.tsv", "w", encoding="utf-8") as f:
        f.write(HEADER)
        for t in sorted(chosen):
            f.write(f"{t}\t{by_token[t][0]}\n")


if __name__ == "__main__":
    main()
