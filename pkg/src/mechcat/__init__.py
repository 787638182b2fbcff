"""mechcat: multistep pulsed-optomechanics simulator for growing mechanical
Schrodinger cat states, with closed-form Wigner functions under thermal
decoherence and optical loss, non-classicality and macroscopicity measures,
heralding statistics, and a brute-force Fock-basis validator."""

__version__ = "0.1.0"

from .phasespace import Grid, PhaseSpaceState, WignerTerm, merge_terms, term_integral, vacuum
from .protocol import (
    OperatorDescriptor,
    ProtocolConfig,
    apply_step,
    build_scs,
    cat_phase_schedule,
    measurement_operator,
    parity_class,
    run_sequence,
)
from .decoherence import (
    ThermalEnvironment,
    bath_occupancy,
    decohered_protocol_state,
    feasibility_check,
    phonons_per_period,
    thermal_channel,
)
from .loss import (
    LossModel,
    effective_coherent_operator,
    loss_mixture_state,
    lossy_herald_probability,
    single_photon_loss_effect,
)
from .measures import (
    MeasureReport,
    cfi_quadrature,
    compute_report,
    lee_jeong,
    macroscopicity,
    min_wigner,
    negative_volume,
    regime_classify,
    scs_delta_series,
)
from .heralding import (
    TimingParams,
    herald_probability,
    noon_probability,
    operator_trace_probability,
    scheme_scaling,
    total_time,
)
from .pulse import (
    CavityParams,
    Envelope,
    coupling_from_pulse,
    gaussian_envelope,
    matched_envelope,
    square_envelope,
)
from .fockoracle import (
    FockDensity,
    FockWigner,
    apply_descriptor,
    thermal_channel_fock,
    thermal_density,
    trace_distance,
    wigner_points,
)
from .devices import DeviceParams, compute_row, load_reference_table
