#!/usr/bin/env python3
"""Rebuild the curated benchmark CSVs under data/.

The raw UCI / ProPublica files are taken from the `responsibly` wheel, which
bundles German Credit, COMPAS and Adult:

    pip download --no-deps responsibly==0.1.2 -d /tmp/wheel
    python3 tools/prepare_datasets.py /tmp/wheel/responsibly-0.1.2-py3-none-any.whl

Bank Marketing is not bundled; download bank-additional-full.csv from the UCI
repository and place it at data/bank-additional-full.csv.
"""
import argparse
import csv
import io
import zipfile
from pathlib import Path

GERMAN_COLUMNS = [
    "status", "duration", "credit_history", "purpose", "credit_amount",
    "savings", "employment", "installment_rate", "personal_status",
    "other_debtors", "residence_since", "property", "age",
    "installment_plans", "housing", "existing_credits", "job",
    "people_liable", "telephone", "foreign_worker", "credit",
]
MALE_CODES = {"A91", "A93", "A94"}

COMPAS_COLUMNS = [
    "sex", "age", "age_cat", "race", "juv_fel_count", "juv_misd_count",
    "juv_other_count", "priors_count", "c_charge_degree", "two_year_recid",
]

ADULT_COLUMNS = [
    "age", "workclass", "fnlwgt", "education", "education_num",
    "marital_status", "occupation", "relationship", "race", "sex",
    "capital_gain", "capital_loss", "hours_per_week", "native_country",
    "income",
]


def read_member(wheel, suffix):
    for name in wheel.namelist():
        if name.endswith(suffix):
            return wheel.read(name).decode("utf-8")
    raise SystemExit(f"{suffix} not found in wheel")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    print(f"wrote {path} ({len(rows)} rows)")


def german(wheel, out_dir):
    rows = []
    for line in read_member(wheel, "german/german.data").splitlines():
        fields = line.split()
        if not fields:
            continue
        record = dict(zip(GERMAN_COLUMNS, fields))
        sex = "male" if record["personal_status"] in MALE_CODES else "female"
        rows.append([record[c] for c in GERMAN_COLUMNS[:-1]] + [sex, "1" if record["credit"] == "1" else "0"])
    write_csv(out_dir / "german.csv", GERMAN_COLUMNS[:-1] + ["sex", "credit"], rows)


def compas(wheel, out_dir):
    reader = csv.DictReader(io.StringIO(read_member(wheel, "compas/compas-scores-two-years.csv")))
    rows = [[r[c] for c in COMPAS_COLUMNS] for r in reader]
    write_csv(out_dir / "compas.csv", COMPAS_COLUMNS, rows)


def adult(wheel, out_dir):
    rows = []
    for member in ("adult/adult.data", "adult/adult.test"):
        for line in read_member(wheel, member).splitlines():
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != len(ADULT_COLUMNS):
                continue
            fields = ["" if f == "?" else f for f in fields]
            fields[-1] = fields[-1].rstrip(".")
            rows.append(fields)
    write_csv(out_dir / "adult.csv", ADULT_COLUMNS, rows)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("wheel")
    parser.add_argument("--out", default=str(Path(__file__).resolve().parent.parent / "data"))
    parser.add_argument("--adult", action="store_true", help="also write adult.csv (~4 MB)")
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    with zipfile.ZipFile(args.wheel) as wheel:
        german(wheel, out_dir)
        compas(wheel, out_dir)
        if args.adult:
            adult(wheel, out_dir)


if __name__ == "__main__":
    main()
