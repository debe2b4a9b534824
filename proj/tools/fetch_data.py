#!/usr/bin/env python3
# Copyright 2026 The DVI Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Rebuilds the bundled case-study fixtures in data/.

Downloads the raw tables (or reads local copies) and applies the exact
transformations documented in data/README.md. Uses the standard library only.

  tools/fetch_data.py --dest data
  tools/fetch_data.py --dest data --hmda-src Hdma.csv --german-src german.data
"""

import argparse
import csv
import io
import os
import urllib.request

HMDA_URL = "https://vincentarelbundock.github.io/Rdatasets/csv/Ecdat/Hdma.csv"
GERMAN_URL = ("https://archive.ics.uci.edu/ml/machine-learning-databases/"
              "statlog/german/german.data")

GERMAN_COLUMNS = [
    "Status_of_checking_account", "Duration", "Credit_history", "Purpose",
    "Credit_amount", "Savings", "Employment_since", "Installment_rate",
    "Sex-Marital_status", "Other_debtors", "Residence_since", "Property",
    "Age", "Other_installment_plans", "Housing", "Existing_credits", "Job",
    "People_liable", "Telephone", "Foreign_worker", "class"
]


def read_source(path, url):
  if path:
    with open(path, encoding="utf-8") as f:
      return f.read()
  with urllib.request.urlopen(url, timeout=60) as resp:
    return resp.read().decode("utf-8")


def build_hmda(text):
  rows = list(csv.reader(io.StringIO(text)))
  header = rows[0]
  out_header = ["condominium" if h == "comdominiom" else h for h in header[1:]]
  out = []
  for row in rows[1:]:
    values = row[1:]
    if any(v == "NA" for v in values):
      continue
    record = dict(zip(header[1:], values))
    record["hir"] = repr(float(record["hir"]) * 100.0)
    out.append([record[h] for h in header[1:]])
  return out_header, out


def build_german(text):
  out = []
  for line in text.splitlines():
    fields = line.split()
    if not fields:
      continue
    fields[-1] = "1" if fields[-1] == "2" else "0"
    out.append(fields)
  return GERMAN_COLUMNS, out


def write_csv(path, header, rows):
  with open(path, "w", newline="", encoding="utf-8") as f:
    writer = csv.writer(f, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def main():
  parser = argparse.ArgumentParser(description=__doc__)
  parser.add_argument("--dest", default="data")
  parser.add_argument("--hmda-src", help="local copy of Ecdat Hdma.csv")
  parser.add_argument("--german-src", help="local copy of UCI german.data")
  args = parser.parse_args()
  os.makedirs(args.dest, exist_ok=True)

  header, rows = build_hmda(read_source(args.hmda_src, HMDA_URL))
  write_csv(os.path.join(args.dest, "hmda.csv"), header, rows)
  print(f"hmda.csv: {len(rows)} rows, {len(header)} columns")

  header, rows = build_german(read_source(args.german_src, GERMAN_URL))
  write_csv(os.path.join(args.dest, "german_credit.csv"), header, rows)
  print(f"german_credit.csv: {len(rows)} rows, {len(header)} columns")


if __name__ == "__main__":
  main()
