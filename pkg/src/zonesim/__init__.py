"""Multizone building thermal simulation with two wall-conduction backends
and spectral analysis of simulation residuals."""

from .building import (BuildingDescription, Layer, Material, Surface, Violation, WallAssembly,
                       Zone, air_gap_layer, u_value, validate_building)
from .buildingfile import BuildingFileError, bundled_building, load_building, loads_building
from .conduction_ctf import (CtfCoefficients, CtfState, LowMassFailure, LowMassWallError,
                             compute_ctf, ctf_or_fallback, ctf_step, massless_fallback,
                             write_ctf_csv)
from .conduction_fd import FdConfig, WallNodeNetwork, discretize, step_implicit
from .materials import MATERIALS, material
from .residuals import (DEFAULT_BANDS, BandDecomposition, BandPartition, CoherencySpectrum,
                        ResidualStats, SpectralConfig, SpectralEstimate, band_power_fraction,
                        coherency, decompose_variance, psd, rank_excitations, residual_stats)
from .solver import (InvalidBuildingError, SimulationConfig, SimulationResult, ZoneNetwork,
                     ZoneTemperatureSeries, distribute_solar, exterior_surface_balance, run,
                     simulate)
from .weather import (REUNION, Site, SolarPosition, WeatherError, WeatherRecord, WeatherSeries,
                      constant_weather, load_weather, sky_temperature, solar_position,
                      synthetic_weather, tilted_irradiance, write_weather)

__version__ = "0.1.0"
