import csv
import json
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from logger import LOGGER_NAME

PlotData = Dict[str, Tuple[List[str], List[List[Any]]]]


def to_builtin(value: Any) -> Any:
    """
    Converts numpy scalars and arrays, complex numbers and tuples into JSON-ready values; complex numbers become [re, im].
    """
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return [to_builtin(item) for item in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [to_builtin(float(value.real)), to_builtin(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return 'nan'
        if math.isinf(value):
            return 'inf' if value > 0 else '-inf'
        return value
    return value


def format_cell(value: Any) -> str:
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[Any]], hex_columns: Sequence[str] = ()) -> None:
    """Writes plot data with floats at 17 significant digits; every column named in `hex_columns` gets a hexfloat twin."""
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    hex_index = [header.index(name) for name in hex_columns]
    with open(path, 'w', newline='', encoding='utf-8') as file:
        writer = csv.writer(file)
        writer.writerow(list(header) + [f"{header[i]}_hex" for i in hex_index])
        for row in rows:
            writer.writerow([format_cell(cell) for cell in row] + [float(row[i]).hex() for i in hex_index])


@dataclass
class ExperimentReport:
    """
    Outcome of one command: resolved configuration, per-trial records, aggregate statistics and pass/fail flags.

    Attributes:
        command (str): CLI command that produced the report.
        version (str): Application version.
        config (Dict[str, Any]): Fully resolved parameters including the master seed.
        records (List[Dict[str, Any]]): Per-trial records, each carrying the seed that reproduces it.
        aggregate (Dict[str, Any]): Aggregate statistics.
        flags (Dict[str, Any]): Criterion flags and regime markers.
        plot_data (PlotData): CSV tables keyed by file stem.
        timings (Dict[str, float]): Wall-clock timings, written to a separate file.
    """
    command: str
    version: str
    config: Dict[str, Any]
    records: List[Dict[str, Any]] = field(default_factory=list)
    aggregate: Dict[str, Any] = field(default_factory=dict)
    flags: Dict[str, Any] = field(default_factory=dict)
    plot_data: PlotData = field(default_factory=dict)
    timings: Dict[str, float] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return to_builtin({
            'command': self.command,
            'version': self.version,
            'config': self.config,
            'records': self.records,
            'aggregate': self.aggregate,
            'flags': self.flags,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + '\n'

    def write(self, output_dir: str) -> List[str]:
        """
        Writes <command>.json, <command>.timings.json and one CSV per plot-data table.

        Returns:
            List[str]: Paths written.
        """
        os.makedirs(output_dir, exist_ok=True)
        written = []
        report_path = os.path.join(output_dir, f"{self.command}.json")
        with open(report_path, 'w', encoding='utf-8') as file:
            file.write(self.to_json())
        written.append(report_path)
        timings_path = os.path.join(output_dir, f"{self.command}.timings.json")
        with open(timings_path, 'w', encoding='utf-8') as file:
            json.dump(to_builtin(self.timings), file, sort_keys=True, indent=2)
        written.append(timings_path)
        for stem, (header, rows) in sorted(self.plot_data.items()):
            path = os.path.join(output_dir, f"{self.command}.{stem}.csv")
            hex_columns = [name for name in header if name in HEX_COLUMNS]
            write_csv(path, header, rows, hex_columns)
            written.append(path)
        logging.getLogger(LOGGER_NAME).info(f"Report for {self.command} written to {output_dir} ({len(written)} files)")
        return written


HEX_COLUMNS = ('eigenvalue', 'f_estimate', 'extrapolated', 'value')
