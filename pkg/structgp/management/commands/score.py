from structgp.engine import metrics
from structgp.formats import graph_from_dict, theta_from_graph_dict

from ._base import StructGPCommand, usage_error


class Command(StructGPCommand):
    help = 'Score a predicted graph against the truth: SHD (extra / missing / reversed), precision, recall, RMSE of S.'

    def add_arguments(self, parser):
        parser.add_argument('--pred', required=True, help='FitResult, truth or edge-list JSON')
        parser.add_argument('--truth', required=True, help='truth JSON written by simulate, or an edge-list JSON')
        parser.add_argument('--out', default=None, help='GraphScore JSON path (default: stdout)')

    def run(self, **options):
        pred_data = self.read_json_input(options['pred'], '--pred')
        truth_data = self.read_json_input(options['truth'], '--truth')
        try:
            pred, truth = graph_from_dict(pred_data), graph_from_dict(truth_data)
            theta_pred, theta_truth = theta_from_graph_dict(pred_data), theta_from_graph_dict(truth_data)
            score = metrics.score(pred, truth, theta_pred, theta_truth)
        except ValueError as exc:
            raise usage_error(str(exc)) from exc
        self.emit_json(score.as_row(), options.get('out'))
