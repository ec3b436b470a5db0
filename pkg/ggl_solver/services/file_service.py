"""Reading and writing problems, ground truths, solutions and reports."""

import json
import logging
import os

import numpy as np
import pandas as pd

from ggl_solver.errors import ProblemFileError
from ggl_solver.models.ensemble import PrecisionEnsemble
from ggl_solver.models.ground_truth import GroundTruth
from ggl_solver.models.manifest import ProblemManifest

logger = logging.getLogger(__name__)

MANIFEST_FILE = 'manifest.json'
TRUTH_FILE = 'truth.json'
SOLUTION_FILE = 'solution.json'
FLOAT_FORMAT = '%.17g'


class FileService:
    """CSV and JSON persistence for the cli."""

    def _read_csv(self, file_path: str, header) -> np.ndarray:
        """Read a numeric CSV file into a float array."""
        try:
            df = pd.read_csv(file_path, header=header, float_precision='round_trip')
            values = df.to_numpy(dtype=float)
        except FileNotFoundError as error:
            raise ProblemFileError(f'file not found: {file_path}', [file_path]) from error
        except (pd.errors.ParserError, pd.errors.EmptyDataError, ValueError) as error:
            raise ProblemFileError(f'malformed CSV file {file_path}: {error}', [file_path]) from error
        if values.ndim != 2 or values.size == 0 or not np.all(np.isfinite(values)):
            raise ProblemFileError(f'CSV file {file_path} does not hold a finite numeric matrix', [file_path])
        return values

    def read_matrix_csv(self, file_path: str) -> np.ndarray:
        """Read a dense p x p matrix without header."""
        matrix = self._read_csv(file_path, header=None)
        if matrix.shape[0] != matrix.shape[1]:
            raise ProblemFileError(f'matrix in {file_path} is not square: {matrix.shape}', [file_path])
        return matrix

    def read_observations_csv(self, file_path: str) -> np.ndarray:
        """Read an n x p observation table with a one-line header."""
        return self._read_csv(file_path, header=0)

    def write_matrix_csv(self, file_path: str, matrix: np.ndarray) -> None:
        """Write a dense matrix without header or index."""
        pd.DataFrame(matrix).to_csv(file_path, header=False, index=False, float_format=FLOAT_FORMAT)

    def write_observations_csv(self, file_path: str, observations: np.ndarray) -> None:
        """Write an observation table with columns x0 .. x(p-1)."""
        columns = [f'x{j}' for j in range(observations.shape[1])]
        pd.DataFrame(observations, columns=columns).to_csv(file_path, index=False, float_format=FLOAT_FORMAT)

    def read_json(self, file_path: str) -> dict:
        """Read a JSON document."""
        try:
            with open(file_path, 'r') as file:
                return json.load(file)
        except FileNotFoundError as error:
            raise ProblemFileError(f'file not found: {file_path}', [file_path]) from error
        except json.JSONDecodeError as error:
            raise ProblemFileError(f'malformed JSON file {file_path}: {error}', [file_path]) from error

    def write_json(self, file_path: str, document: dict) -> None:
        """Write a JSON document."""
        with open(file_path, 'w') as file:
            json.dump(document, file, indent=4)

    def ensure_dir(self, directory: str) -> None:
        """Create an output directory, raising ProblemFileError if that is impossible."""
        try:
            os.makedirs(directory, exist_ok=True)
        except OSError as error:
            raise ProblemFileError(f'cannot create output directory {directory}: {error}', [directory]) from error
        if not os.access(directory, os.W_OK):
            raise ProblemFileError(f'output directory {directory} is not writable', [directory])

    def read_manifest(self, manifest_path: str) -> ProblemManifest:
        """Read a manifest and resolve its file paths against the manifest directory."""
        document = self.read_json(manifest_path)
        base = os.path.dirname(os.path.abspath(manifest_path))
        try:
            files = [os.path.join(base, name) for name in document['files']]
            return ProblemManifest(document['mode'], int(document['p']), int(document['K']), files, document.get('n'))
        except (KeyError, TypeError, ValueError) as error:
            raise ProblemFileError(f'malformed manifest {manifest_path}: {error}', [manifest_path]) from error

    def write_problem(self, out_dir: str, covariances: PrecisionEnsemble, sample_counts: list[int]) -> str:
        """Write covariance CSVs plus a covariance-mode manifest; return the manifest path."""
        self.ensure_dir(out_dir)
        files = []
        for k in range(covariances.k_classes):
            name = f'cov_{k}.csv'
            self.write_matrix_csv(os.path.join(out_dir, name), covariances.block(k))
            files.append(name)
        manifest = ProblemManifest('covariance', covariances.dim, covariances.k_classes, files, sample_counts)
        manifest_path = os.path.join(out_dir, MANIFEST_FILE)
        self.write_json(manifest_path, manifest.to_dict())
        logger.info('wrote problem with K=%d, p=%d to %s', covariances.k_classes, covariances.dim, out_dir)
        return manifest_path

    def write_truth(self, truth_dir: str, truth: GroundTruth) -> str:
        """Write truth.json plus one precision CSV per class; return the truth.json path."""
        self.ensure_dir(truth_dir)
        document = truth.to_dict()
        document['files'] = []
        for k in range(truth.k_classes):
            name = f'precision_{k}.csv'
            self.write_matrix_csv(os.path.join(truth_dir, name), truth.precisions.block(k))
            document['files'].append(name)
        truth_path = os.path.join(truth_dir, TRUTH_FILE)
        self.write_json(truth_path, document)
        return truth_path

    def read_truth(self, truth_path: str) -> GroundTruth:
        """Read a ground truth from its truth.json (or the directory holding it)."""
        if os.path.isdir(truth_path):
            truth_path = os.path.join(truth_path, TRUTH_FILE)
        document = self.read_json(truth_path)
        base = os.path.dirname(os.path.abspath(truth_path))
        try:
            blocks = [self.read_matrix_csv(os.path.join(base, name)) for name in document['files']]
            common = {(int(i), int(j)) for i, j in document['common_edges']}
            edges = [{(int(i), int(j)) for i, j, _ in class_edges} for class_edges in document['edges']]
        except (KeyError, TypeError, ValueError) as error:
            raise ProblemFileError(f'malformed ground truth {truth_path}: {error}', [truth_path]) from error
        return GroundTruth(PrecisionEnsemble(blocks), common, [class_edges - common for class_edges in edges])

    def write_solution(self, out_dir: str, theta: PrecisionEnsemble, prefix: str = 'theta') -> str:
        """Write per-class CSVs and a sparse triplet JSON of the upper triangle; return the JSON path."""
        self.ensure_dir(out_dir)
        files = []
        for k in range(theta.k_classes):
            name = f'{prefix}_{k}.csv'
            self.write_matrix_csv(os.path.join(out_dir, name), theta.block(k))
            files.append(name)
        ks, rows, cols = np.nonzero(np.triu(theta.blocks))
        entries = [[int(k), int(i), int(j), float(theta.blocks[k, i, j])] for k, i, j in zip(ks, rows, cols)]
        solution_path = os.path.join(out_dir, SOLUTION_FILE)
        self.write_json(solution_path, {'p': theta.dim, 'K': theta.k_classes, 'files': files, 'entries': entries})
        return solution_path

    def read_solution(self, solution_path: str) -> PrecisionEnsemble:
        """Rebuild an estimate from its sparse triplet JSON (or the directory holding it)."""
        if os.path.isdir(solution_path):
            solution_path = os.path.join(solution_path, SOLUTION_FILE)
        document = self.read_json(solution_path)
        try:
            blocks = np.zeros((int(document['K']), int(document['p']), int(document['p'])))
            for k, i, j, value in document['entries']:
                blocks[k, i, j] = value
                blocks[k, j, i] = value
        except (KeyError, TypeError, ValueError, IndexError) as error:
            raise ProblemFileError(f'malformed solution {solution_path}: {error}', [solution_path]) from error
        return PrecisionEnsemble(blocks)

    def read_estimate(self, estimate_path: str) -> PrecisionEnsemble:
        """Read an estimate from a solution or, for sanity checks, from a ground truth."""
        if os.path.isdir(estimate_path):
            if os.path.exists(os.path.join(estimate_path, SOLUTION_FILE)):
                return self.read_solution(estimate_path)
            return self.read_truth(estimate_path).precisions
        if 'common_edges' in self.read_json(estimate_path):
            return self.read_truth(estimate_path).precisions
        return self.read_solution(estimate_path)
