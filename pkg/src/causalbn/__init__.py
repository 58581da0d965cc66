"""causalbn: discrete causal discovery, model averaging, and do-operator
intervention analysis for categorical survey data."""

from .average import AverageResult, EdgeTally, default_threshold, model_average, tally
from .cbn import (Cbn, Cpt, Factor, InterventionQuery, ZeroProbabilityEvidence,
                  ace, cross_validate, docalc_rule_applies, fit_cpts, intervene,
                  intervention_delta_report, posterior, sensitivity)
from .data import (CategoricalDataset, ContingencyTable, DataError, VariableSpec,
                   count, load_csv, load_variable_specs, marginals, preprocess)
from .graph import (Graph, GraphError, KnowledgeGraph, MutilatedViews,
                    NoConsistentExtension, cpdag_to_dag, d_separated,
                    dag_to_cpdag, is_acyclic, markov_blanket, mutilated_views)
from .learn import (Algorithm, GraphKind, LearnConfig, LearnResult, fast_iamb,
                    gs, hill_climb, iamb, learn, mmhc, pc_stable, tabu_search,
                    to_dag)
from .metrics import (ConfusionCounts, MetricReport, agreement_table, bsf,
                      confusion, f1, metric_report, shd)
from .stats import CiTestResult, ScoreValue, bic_score, g2_test, mutual_information

__version__ = "0.1.0"
