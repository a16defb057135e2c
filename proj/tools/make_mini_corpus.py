#!/usr/bin/env python3
"""Generate the bundled 125-sample mini-corpus (5 classes x 25).

Each snippet is a small C function built from neutral filler lines plus one
or two class-signature lines placed in the body. The output is deterministic.

    python3 tools/make_mini_corpus.py > data/mini_corpus.csv
"""

import csv
import random
import sys

FILLER = [
    ["int i = 0;"],
    ["int total = 0;"],
    ["size_t count = n;"],
    ["for (i = 0; i < count; i++) {", "    total += i;", "}"],
    ["if (total > limit) {", "    total = limit;", "}"],
    ["unsigned flags = 0;", "flags |= MODE_READ;"],
    ["log_debug(\"step %d\", i);"],
    ["state->ticks++;"],
    ["double ratio = 0.5;"],
    ["while (retries-- > 0) {", "    poll_device(dev);", "}"],
    [""],
]

SIGNATURES = {
    "CWE-119": [
        "memcpy(buf, src, len);",
        "buf[idx + offset] = data[idx];",
        "memmove(dst + pos, src, length);",
        "table[index] = value;",
    ],
    "CWE-120": [
        "strcpy(dest, input);",
        "strcat(dest, suffix);",
        "gets(line);",
        "sprintf(out, \"%s\", name);",
    ],
    "CWE-469": [
        "ptrdiff_t gap = (end - start) / sizeof(int *);",
        "size_t span = (char *)hi - (char *)lo;",
        "long dist = p2 - p1;",
        "offset = (q - base) * sizeof(*q);",
    ],
    "CWE-476": [
        "node->next->value = v;",
        "ptr = malloc(size);",
        "ptr->field = 0;",
        "result->data[0] = *item;",
    ],
    "CWE-other": [
        "snprintf(buf, sizeof(buf), \"%s\", s);",
        "if (p != NULL) { use(p); }",
        "strncpy(dst, src, sizeof(dst) - 1);",
        "assert(len < capacity);",
    ],
}


def make_snippet(rng, label, serial):
    blocks = [rng.choice(FILLER) for _ in range(rng.randint(3, 6))]
    for sig in rng.sample(SIGNATURES[label], rng.randint(1, 2)):
        blocks.insert(rng.randint(1, len(blocks)), [sig])
    name = f"fn_{label.replace('-', '_').lower()}_{serial}"
    lines = [f"void {name}(char *buf, const char *src, size_t n) {{"]
    lines += ["    " + line if line else "" for block in blocks for line in block]
    lines.append("    return;")
    lines.append("}")
    return "\n".join(lines)


def main():
    rng = random.Random(20240521)
    writer = csv.writer(sys.stdout, quoting=csv.QUOTE_MINIMAL, lineterminator="\n")
    writer.writerow(["id", "code", "label"])
    for label in SIGNATURES:
        for serial in range(25):
            sid = f"{label.lower()}-{serial:02d}"
            writer.writerow([sid, make_snippet(rng, label, serial), label])


if __name__ == "__main__":
    main()
