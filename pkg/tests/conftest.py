import pytest

from pars.teacher import SimTeacherConfig

RECIPE_TEXT = """QD-LED recipe:
substrate:
  type: ITO/glass, thickness_nm: 150, rsheet_ohm_sq: 15,
  roughness_Rq_nm: 1.5
  pretreat: UV-ozone; solvent rinse (IPA); 120 C annealing 10 min
stack:
  [HIL layer]
    substances: PEDOT:PSS (AI4083), thickness_nm: 40, filtration_um: 0.45
    work_function_eV: 5.1, process: spin (4000 rpm, 60 s -> 8000 rpm, 5 s ramp)
    annealing (150 C, 10 min, air)
  [HTL layer]
    substances: Poly-TPD, thickness_nm: 20, HOMO_eV: -5.2
    solution: 8 mg/mL, chlorobenzene (99.8%, anhydrous), filtration_um: 0.2
    process: spin(3000 rpm, 45 s); annealing(120 C, 10 min, N2)
  [EML layer]
    substances: CdSe/ZnS core/shell QDs (green), emission_peak_nm: 525,
    FWHM_nm: 22, core_diameter_nm: 5.5, ligand_primary: oleic acid / oleylamine,
    solution_conc_mg_mL: 25, solvent: octane (anhydrous, <10 ppm H2O)
    target_areal_density_ug_cm2: 40, thickness_nm: 25,
    process: spin (2000 rpm, 30 s); annealing (80 C, 5 min), film_roughness: 1.8
    PLQY_solution_fraction: 0.92, PLQY_film_fraction: 0.80
  [ETL layer]
    substances: ZnO nanoparticles (sol-gel/colloidal), mean_particle_diam_nm: 5
    thickness_nm: 30, solution: 10 mg/mL, isopropanol
    process: spin(3000 rpm, 30 s); annealing (90 C, 5 min, N2)
"""


@pytest.fixture
def recipe_text():
    return RECIPE_TEXT


@pytest.fixture
def noiseless_sim():
    return SimTeacherConfig(bias=0.0, sigma_base=0.0, sigma_per_temp=0.0,
                            outlier_prob=0.0, out_of_range_prob=0.0, seed=0)
