"""Writing and merging experiment reports."""
import csv
import glob
import io
import json
import os
from typing import List, Optional

from absl import logging

from varops.errors import ConfigError

CSV_COLUMNS = ["instance_id", "seed", "ratio", "n", "ladder_density", "experiment"]


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, allow_nan=False)


def write_json(report: dict, path: Optional[str]) -> str:
    """Write a report dict as JSON to `path` (stdout text if None)."""
    text = dumps(report)
    if path is not None:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, "w") as file:
            file.write(text + "\n")
        logging.info("Report written to %s.", path)
    return text


def load_reports(directory: str) -> List[dict]:
    """All JSON reports of a directory, in file-name order."""
    paths = sorted(glob.glob(os.path.join(directory, "*.json")))
    if not paths:
        raise ConfigError(f"No JSON reports found in {directory}.")
    reports = []
    for path in paths:
        with open(path) as file:
            try:
                reports.append(json.load(file))
            except json.JSONDecodeError as err:
                raise ConfigError(f"Report {path} is not valid JSON: {err}") from err
    return reports


def report_rows(reports: List[dict]) -> List[dict]:
    rows = []
    for report in reports:
        for row in report.get("rows", []):
            rows.append({**row, "experiment": report.get("experiment", "")})
    return rows


def aggregate(directory: str, fmt: str = "csv") -> str:
    """Merge the reports of a directory into one CSV table or JSON list."""
    reports = load_reports(directory)
    if fmt == "json":
        return dumps(reports)
    if fmt != "csv":
        raise ConfigError(f"Unknown report format {fmt}.")
    buffer = io.StringIO()
    writer = csv.DictWriter(
        buffer, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n"
    )
    writer.writeheader()
    for row in report_rows(reports):
        writer.writerow(row)
    return buffer.getvalue()
