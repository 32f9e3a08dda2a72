"""Lattice-coded dynamic decode-and-forward toolkit for the K-user
multiple-access relay channel: equivalent real channels, nested
Construction-A codebooks with one-to-one / modulo-sum relay mappers, coset
decoders built on exact sphere search, rate-region outage evaluation, and
reproducible Monte Carlo sweeps."""

from .channel import (ChannelRealization, MarcConfig, SuperChannel,
                      build_dst_superchannel, build_relay_listen_channel,
                      build_relay_superchannel, build_superchannel,
                      embed_complex, embed_vector, sample_rayleigh,
                      stack_symbols, transmitter_slices)
from .codec import (CosetSearch, GdfeFilters, KStageResult, OneStageResult,
                    TransmitState, build_search, compute_gdfe, coset_metric,
                    encode, k_stage_decode, one_stage_decode, relay_decode)
from .errors import (ConfigurationError, EstimationError, MarclatError,
                     NumericalError, SearchBudgetError)
from .lattice import (LatticePoint, NestedLatticeCode, code_from_text,
                      code_to_text, construction_a, contains_int,
                      from_code_rows, index_to_coset_leader, mod_lattice,
                      normalize_power, quantize, sample_dither, second_moment)
from .mapper import (MapperKind, RelayMapper, build_superlattice_generator,
                     coset_consistency_check, make_mapper, map_indices)
from .rates import (Decoder, InclusionReport, OutageVerdict, RateRegionSpec,
                    decision_time, modulo_sum_loss, one_stage_dst_loss,
                    one_stage_relay_loss, outage_indicator, rate_ung,
                    region_inclusion_check, subsets)
from .sim import (Curve, CurvePoint, SimPlan, estimate_slope,
                  evaluate_outage_masks, run_coded_bler, run_outage,
                  wilson_halfwidth)
from .sphere import sphere_decode, closest_point_lex

__version__ = "0.1.0"
