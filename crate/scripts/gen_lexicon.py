#!/usr/bin/env python3
"""Regenerates crates/core/data/lexicon_en.json."""
import json
import pathlib

NAMES = """hydrogen helium lithium beryllium boron carbon nitrogen oxygen fluorine neon
sodium magnesium aluminium silicon phosphorus sulfur chlorine argon potassium calcium
scandium titanium vanadium chromium manganese iron cobalt nickel copper zinc
gallium germanium arsenic selenium bromine krypton rubidium strontium yttrium zirconium
niobium molybdenum technetium ruthenium rhodium palladium silver cadmium indium tin
antimony tellurium iodine xenon caesium barium lanthanum cerium praseodymium neodymium
promethium samarium europium gadolinium terbium dysprosium holmium erbium thulium ytterbium
lutetium hafnium tantalum tungsten rhenium osmium iridium platinum gold mercury
thallium lead bismuth polonium astatine radon francium radium actinium thorium
protactinium uranium neptunium plutonium americium curium berkelium californium einsteinium fermium
mendelevium nobelium lawrencium rutherfordium dubnium seaborgium bohrium hassium meitnerium darmstadtium
roentgenium copernicium nihonium flerovium moscovium livermorium tennessine oganesson""".split()

SYMBOLS = """H He Li Be B C N O F Ne Na Mg Al Si P S Cl Ar K Ca Sc Ti V Cr Mn Fe Co Ni Cu Zn
Ga Ge As Se Br Kr Rb Sr Y Zr Nb Mo Tc Ru Rh Pd Ag Cd In Sn Sb Te I Xe Cs Ba La Ce Pr Nd
Pm Sm Eu Gd Tb Dy Ho Er Tm Yb Lu Hf Ta W Re Os Ir Pt Au Hg Tl Pb Bi Po At Rn Fr Ra Ac Th
Pa U Np Pu Am Cm Bk Cf Es Fm Md No Lr Rf Db Sg Bh Hs Mt Ds Rg Cn Nh Fl Mc Lv Ts Og""".split()

assert len(NAMES) == len(SYMBOLS) == 118

# "lead" is mostly a verb in abstracts. Lookups ignore case, so short
# abbreviations that collide with words ("no", "co-doped") are left out.
SKIP = {"lead"}
ALIASES = {"aluminum": "Al", "sulphur": "S", "cesium": "Cs"}

COMPOUNDS = {
    "silica": "SiO2",
    "alumina": "Al2O3",
    "titania": "TiO2",
    "zirconia": "ZrO2",
    "magnesia": "MgO",
    "ceria": "CeO2",
    "yttria": "Y2O3",
    "soda-lime": "Na2O-CaO-SiO2",
    "soda lime": "Na2O-CaO-SiO2",
    "borosilicate": "B2O3-SiO2",
    "hydroxyapatite": "Ca10(PO4)6(OH)2",
    "fluorapatite": "Ca5(PO4)3F",
    "bioglass": "SiO2-CaO-Na2O-P2O5",
    "45S5": "SiO2-CaO-Na2O-P2O5",
    "ITO": "InSnO",
    "indium tin oxide": "InSnO",
    "FTO": "SnO2F",
    "fluorine-doped tin oxide": "SnO2F",
    "AZO": "ZnOAl",
    "YAG": "Y3Al5O12",
    "yttrium aluminum garnet": "Y3Al5O12",
    "yttrium aluminium garnet": "Y3Al5O12",
    "PZT": "PbZrTiO3",
    "ZBLAN": "ZrF4-BaF2-LaF3-AlF3-NaF",
    "BGO": "Bi4Ge3O12",
    "silicon carbide": "SiC",
    "silicon nitride": "Si3N4",
    "boron nitride": "BN",
    "BN": "BN",
    "HF": "HF",
    "hydrofluoric acid": "HF",
    "carbon monoxide": "CO",
    "nitric oxide": "NO",
    "sodium chloride": "NaCl",
    "calcium fluoride": "CaF2",
    "zinc oxide": "ZnO",
    "titanium dioxide": "TiO2",
    "silicon dioxide": "SiO2",
    "aluminium oxide": "Al2O3",
    "aluminum oxide": "Al2O3",
    "lead oxide": "PbO",
    "boric oxide": "B2O3",
    "phosphorus pentoxide": "P2O5",
    "quartz": "SiO2",
    "wollastonite": "CaSiO3",
    "graphene": "C",
    "graphite": "C",
    "diamond": "C",
    "water": "H2O",
    "carbon dioxide": "CO2",
}

entries = {n: s for n, s in zip(NAMES, SYMBOLS) if n not in SKIP}
entries.update(ALIASES)
entries.update(COMPOUNDS)

out = pathlib.Path(__file__).resolve().parent.parent / "crates/core/data/lexicon_en.json"
out.write_text(json.dumps({"extended_elements": False, "entries": entries}, indent=1, ensure_ascii=False) + "\n")
