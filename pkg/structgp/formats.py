"""File format helpers for structgp.

Dataset CSVs, Theta / truth / FitResult / score JSON and report CSVs. Files
carry 1-based patient and task ids; the engine works 0-based, and the
conversion happens only here. Reused by every management command.
"""
import json
from pathlib import Path

import numpy as np
import pandas as pd

from structgp.engine.exceptions import DatasetError
from structgp.engine.model import Dag, Dataset, Theta

DATASET_COLUMNS = ['patient', 'task', 'time', 'value']
FLOAT_FORMAT = '%.17g'

# leading report columns; metric columns follow in the order rows provide them
REPORT_KEY_COLUMNS = ['name', 'sweep_index', 'k', 'md', 'n_lambda', 'r', 'rep', 'seed']


def read_dataset_csv(path, k=None) -> Dataset:
    path = Path(path)
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    missing = [c for c in DATASET_COLUMNS if c not in frame.columns]
    if missing:
        raise DatasetError(f"{path}: missing columns {', '.join(missing)}")
    if frame.empty:
        raise DatasetError(f"{path}: no observations")
    if frame[DATASET_COLUMNS].isna().any().any():
        raise DatasetError(f"{path}: empty cells")
    patient = frame['patient'].to_numpy()
    task = frame['task'].to_numpy()
    if not (np.issubdtype(patient.dtype, np.integer) and np.issubdtype(task.dtype, np.integer)):
        raise DatasetError(f"{path}: patient and task must be integer ids")
    if patient.min() < 1 or task.min() < 1:
        raise DatasetError(f"{path}: ids are 1-based")
    k = int(k or task.max())
    try:
        return Dataset(
            patient=patient - 1,
            task=task - 1,
            time=frame['time'].to_numpy(dtype=float),
            value=frame['value'].to_numpy(dtype=float),
            k=k,
            r=int(patient.max()),
        )
    except ValueError as exc:
        raise DatasetError(f"{path}: {exc}") from exc


def dataset_frame(dataset: Dataset) -> pd.DataFrame:
    return pd.DataFrame({
        'patient': dataset.patient + 1,
        'task': dataset.task + 1,
        'time': dataset.time,
        'value': dataset.value,
    })


def write_dataset_csv(dataset: Dataset, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    dataset_frame(dataset).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def theta_to_dict(theta: Theta) -> dict:
    return {
        'k': theta.k,
        'S': theta.S.tolist(),
        'ell': theta.ell.tolist(),
        'sigma': theta.sigma,
    }


def theta_from_dict(data: dict) -> Theta:
    try:
        theta = Theta(S=np.array(data['S'], dtype=float), ell=np.array(data['ell'], dtype=float),
                      sigma=float(data.get('sigma', 0.01)))
    except KeyError as exc:
        raise ValueError(f"theta JSON lacks key {exc}") from exc
    if 'k' in data and int(data['k']) != theta.k:
        raise ValueError(f"theta JSON declares k={data['k']} but S is {theta.k}x{theta.k}")
    return theta


def edges_to_list(dag: Dag) -> list:
    return [[u + 1, v + 1] for u, v in dag.edges()]


def dag_from_edge_list(k: int, edges) -> Dag:
    return Dag.from_edges(k, [(int(u) - 1, int(v) - 1) for u, v in edges])


def truth_to_dict(theta: Theta, dag: Dag, extra: dict | None = None) -> dict:
    return {**theta_to_dict(theta), 'edges': edges_to_list(dag), **(extra or {})}


def fit_result_to_dict(result) -> dict:
    selected = result.selected
    return {
        'k': selected.theta.k,
        'lambda': selected.lam,
        'threshold': result.threshold_used,
        'S_raw': selected.theta.S.tolist(),
        'S': selected.theta_dag.S.tolist(),
        'ell': selected.theta.ell.tolist(),
        'sigma': selected.theta.sigma,
        'edges': edges_to_list(result.graph),
        'aic': selected.aic,
        'nmll': selected.nmll,
        'path': [
            {'lambda': p.lam, 'aic': p.aic, 'nmll': p.nmll, 'nnz': p.nnz, 'h': p.h, 'threshold': p.threshold}
            for p in result.path
        ],
        'failures': [{'lambda': lam, 'error': msg} for lam, msg in result.failures],
        # wall time stays out so reruns are byte-identical
        'diagnostics': {key: val for key, val in result.diagnostics.items() if key != 'wall_time'},
    }


def write_json(data: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + '\n')
    return path


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ValueError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path} is not valid JSON: {exc}") from exc


def graph_from_dict(data: dict) -> Dag:
    """Dag from a FitResult, truth, or bare ``{"k": .., "edges": [..]}`` object."""
    if 'edges' in data and 'k' in data:
        return dag_from_edge_list(int(data['k']), data['edges'])
    if 'S' in data:
        return Dag.from_weights(np.array(data['S'], dtype=float))
    raise ValueError("graph JSON needs 'k' and 'edges', or 'S'")


def theta_from_graph_dict(data: dict) -> Theta | None:
    if 'S' in data and 'ell' in data:
        return theta_from_dict(data)
    return None


def report_frame(rows) -> pd.DataFrame:
    frame = pd.DataFrame(rows)
    leading = [c for c in REPORT_KEY_COLUMNS if c in frame.columns]
    rest = [c for c in frame.columns if c not in leading]
    frame = frame[leading + rest]
    if {'sweep_index', 'rep'} <= set(frame.columns):
        frame = frame.sort_values(['sweep_index', 'rep'], kind='stable').reset_index(drop=True)
    return frame


def write_report_csv(rows, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    report_frame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    return path


def read_report_csv(path) -> pd.DataFrame:
    path = Path(path)
    try:
        frame = pd.read_csv(path, keep_default_na=False, na_values=[''])
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise ValueError(f"cannot read report {path}: {exc}") from exc
    if 'error' in frame:
        frame['error'] = frame['error'].fillna('')
    return frame
