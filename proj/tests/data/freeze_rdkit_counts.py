# Copyright 2026  The pqr Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#  http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Freeze RDKit reference counts for corpus100.smi.

Columns: smiles, heavy atoms, bonds, ring bonds, per-atom total H (comma list).
Regenerate with: python3 freeze_rdkit_counts.py > corpus100_rdkit.tsv
"""
from rdkit import Chem

for line in open("corpus100.smi"):
    s = line.strip()
    if not s or s.startswith("#"):
        continue
    m = Chem.MolFromSmiles(s)
    hs = ",".join(str(a.GetTotalNumHs()) for a in m.GetAtoms())
    ring = sum(1 for b in m.GetBonds() if b.IsInRing())
    print(f"{s}\t{m.GetNumAtoms()}\t{m.GetNumBonds()}\t{ring}\t{hs}")
