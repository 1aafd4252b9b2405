#!/usr/bin/env python3
"""Regenerates the bundled mini-corpus under crates/cli/data/.

Writes mini_corpus.jsonl (200 glass-science records in four themes),
labeled.jsonl (relevance training set) and sample_articles.xml.
"""
import json
import pathlib
import random

OUT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "cli" / "data"
rng = random.Random(20240611)

THEMES = {
    "bioactive": {
        "words": "bioactive bioactivity hydroxyapatite bone implant scaffold dissolution apatite "
        "osteoblast biocompatibility resorption regeneration cytotoxicity tissue dental "
        "in-vitro ion-release degradation porous cell".split(),
        "sentences": [
            "Bioactive glass scaffolds were immersed in simulated body fluid to follow apatite formation.",
            "The dissolution rate of the bioactive glass controls ion release and bone bonding.",
            "Hydroxyapatite layers formed on the implant surface within days of immersion.",
            "Osteoblast proliferation and cytotoxicity were assessed for the porous scaffolds.",
            "Resorption and tissue regeneration depend on the network connectivity of the bioactive glass.",
            "Dental applications benefit from fluoride release and antibacterial bioactivity.",
        ],
        "species": ["SiO2-CaO-Na2O-P2O5", "45S5 bioglass", "CaF2", "P2O5", "CaO", "Na2O",
                    "hydroxyapatite", "SrO", "MgO", "ZnO", "CaCl2", "NaCl", "Ag2O"],
        "fcl": ["CaF2", "CaCl2"],
        "captions": [
            "SEM micrographs of the scaffold surface after immersion in simulated body fluid.",
            "XRD patterns showing hydroxyapatite peaks after 7 days.",
            "FTIR spectra of the glass before and after immersion.",
            "Cell viability of osteoblasts cultured on the scaffolds.",
            "Ion release profiles of calcium and phosphorus.",
            "Energy dispersive spectra of the apatite layer.",
        ],
    },
    "optical fibre": {
        "words": "optical fibre fiber laser luminescence erbium amplifier waveguide photonic "
        "refractive emission lifetime upconversion rare-earth attenuation core cladding "
        "bandwidth transparency infrared".split(),
        "sentences": [
            "Erbium doped fibre amplifiers were drawn from low loss preforms.",
            "Upconversion luminescence of rare-earth ions was recorded under laser pumping.",
            "The refractive index contrast between core and cladding guides the optical mode.",
            "Emission lifetime and attenuation were measured along the fibre.",
            "Photonic waveguides written by femtosecond laser showed low propagation loss.",
            "Infrared transparency makes fluoride fibres attractive for mid-infrared lasers.",
        ],
        "species": ["ZBLAN", "Er2O3", "Yb2O3", "GeO2", "TeO2", "Nd:YAG", "Er3+", "Tm3+",
                    "fluorozirconate", "Ga2S3", "As2S3", "AgCl", "BaF2", "LaF3"],
        "fcl": ["BaF2", "AgCl"],
        "captions": [
            "Emission spectra under 980 nm excitation.",
            "Absorption spectra of the doped fibres.",
            "Photoluminescence decay curves of the erbium transition.",
            "Refractive index profile across the fibre core.",
            "Excitation spectra monitored at 1530 nm.",
            "Fluorescence intensity as a function of pump power.",
        ],
    },
    "mechanical": {
        "words": "hardness fracture toughness indentation crack elastic modulus strength "
        "brittleness stress tempering chemical-strengthening scratch fatigue ductility "
        "vickers compressive flexural deformation densification".split(),
        "sentences": [
            "Vickers indentation was used to estimate hardness and crack resistance.",
            "Chemical strengthening by ion exchange raised the flexural strength.",
            "Fracture toughness correlates with elastic modulus and packing density.",
            "Compressive stress profiles were measured after tempering.",
            "Scratch and fatigue tests reveal the brittleness of the glass surface.",
            "Densification under indentation reduces crack initiation.",
        ],
        "species": ["Al2O3", "KNO3", "Li2O", "B2O3", "ZrO2", "SiO2", "Na2O", "K2O", "MgO",
                    "KCl", "NaF", "Y2O3"],
        "fcl": ["NaF", "KCl"],
        "captions": [
            "Vickers hardness versus alumina content.",
            "Optical micrographs of radial cracks around indentation sites.",
            "Fracture surfaces after three-point bending.",
            "Stress profiles measured after ion exchange.",
            "Elastic modulus as a function of composition.",
            "SEM image of the crack tip.",
        ],
    },
    "crystallization": {
        "words": "crystallization nucleation glass-ceramic annealing viscosity transition "
        "kinetics phase-separation crystal growth devitrification thermal stability "
        "activation enthalpy spinodal nanocrystals heat-treatment melting".split(),
        "sentences": [
            "Nucleation and crystal growth rates were derived from isothermal annealing.",
            "The glass transition and crystallization temperatures follow from thermal analysis.",
            "Phase separation precedes devitrification in the glass-ceramic.",
            "Viscosity data above the transition set the kinetics of crystal growth.",
            "Activation enthalpy for crystallization was obtained by the Kissinger method.",
            "Heat treatment produced nanocrystals embedded in the residual glass.",
        ],
        "species": ["Li2O-Al2O3-SiO2", "TiO2", "ZrO2", "P2O5", "Li2Si2O5", "BaO", "MgAl2O4",
                    "CaF2", "LaCl3", "NaCl"],
        "fcl": ["CaF2", "LaCl3"],
        "captions": [
            "DSC curves recorded at different heating rates.",
            "XRD patterns after annealing at 700 C.",
            "TEM image of nanocrystals in the glass matrix.",
            "Viscosity versus temperature.",
            "Crystal growth rate as a function of annealing temperature.",
            "DTA traces of the parent glass.",
        ],
    },
}

PHRASES = ["solid state synthesis", "melt quenching", "sol-gel"]
JOURNALS = ["J. Non-Cryst. Solids", "J. Am. Ceram. Soc.", "Ceram. Int.", "Opt. Mater."]
AUTHORS = ["A. Müller", "B. Chen", "C. Okafor", "D. Silva", "E. Novák", "F. Haddad", "G. Ito", "H. Larsen"]


def make_doc(i, theme_name, theme):
    words = rng.sample(theme["words"], 8)
    sentences = rng.sample(theme["sentences"], 3)
    species = rng.sample(theme["species"], 3)
    # One in three documents of each theme names both a fluoride and a chloride.
    if i % 3 == 0:
        species = list(dict.fromkeys(species + theme["fcl"]))
    phrase = rng.choice(PHRASES)
    text = (
        f"{sentences[0]} Glasses containing {', '.join(species[:-1])} and {species[-1]} were prepared by {phrase}. "
        f"{sentences[1]} We discuss {' '.join(words[:4])} and {' '.join(words[4:])}. {sentences[2]}"
    )
    doc_id = f"10.5555/atlas.{i:04d}"
    n_caps = rng.choice([1, 2, 2, 3])
    caps = rng.sample(theme["captions"], n_caps)
    return {
        "doc_id": doc_id,
        "title": f"{theme_name.capitalize()} glass study {i}",
        "abstract": text,
        "journal": rng.choice(JOURNALS),
        "authors": rng.sample(AUTHORS, 2),
        "captions": [{"figure": k + 1, "text": c} for k, c in enumerate(caps)],
    }


def mini_corpus():
    names = list(THEMES)
    docs = []
    for i in range(200):
        name = names[i % len(names)]
        docs.append(make_doc(i, name, THEMES[name]))
    rng.shuffle(docs)
    return docs


OFF_TOPIC = [
    "Lithium ion battery cathodes based on LiFePO4 were cycled at high rate.",
    "Polymer electrolytes of polyethylene oxide showed improved ionic conductivity.",
    "Metal organic frameworks adsorb carbon dioxide at low pressure.",
    "Perovskite solar cells degrade under humidity and illumination.",
    "Steel welds were examined for hydrogen embrittlement.",
    "Graphene membranes filter salt ions from seawater.",
]


def labeled_set():
    out = []
    names = list(THEMES)
    for i in range(60):
        theme = THEMES[names[i % len(names)]]
        d = make_doc(1000 + i, names[i % len(names)], theme)
        d["doc_id"] = f"10.5555/train.{i:04d}"
        d["captions"] = []
        d["label"] = 1
        out.append(d)
    for i in range(40):
        text = " ".join(rng.sample(OFF_TOPIC, 3))
        out.append({"doc_id": f"10.5555/off.{i:04d}", "title": f"Off-topic study {i}", "abstract": text, "label": 0})
    rng.shuffle(out)
    return out


def sample_xml(docs):
    parts = ["<records>"]
    for d in docs:
        caps = "".join(f"<figure><caption>{c['text']}</caption></figure>" for c in d["captions"])
        authors = "".join(f"<author>{a}</author>" for a in d["authors"])
        parts.append(
            f"<article><id>https://doi.org/{d['doc_id']}</id><title>{d['title']}</title>"
            f"<journal>{d['journal']}</journal><authors>{authors}</authors>"
            f"<abstract><p>{d['abstract']}</p></abstract><figures>{caps}</figures></article>"
        )
    parts.append("</records>")
    return "\n".join(parts) + "\n"


def write_jsonl(path, rows):
    with open(path, "w", encoding="utf-8") as f:
        for r in rows:
            f.write(json.dumps(r, ensure_ascii=False) + "\n")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    docs = mini_corpus()
    write_jsonl(OUT / "mini_corpus.jsonl", docs)
    write_jsonl(OUT / "labeled.jsonl", labeled_set())
    extra = [make_doc(5000 + i, "bioactive", THEMES["bioactive"]) for i in range(5)]
    for k, d in enumerate(extra):
        d["doc_id"] = f"10.5555/xml.{k:04d}"
    (OUT / "sample_articles.xml").write_text(sample_xml(extra), encoding="utf-8")
