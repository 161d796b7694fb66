"""
Grid-sheet meshing and watertight repair
========================================

Turns a depth map into a warped grid-sheet triangle mesh, cuts out the
faces that span a depth discontinuity, and repairs the sheet: background
holes are re-interpolated row by row, foreground objects are completed by
breadth-first growth. The audit at the end confirms the interior is
watertight again. Writes OBJ and PLY next to this script.
"""

import os

from nightsim.config import PipelineConfig
from nightsim.filters import flag_uncertain_regions
from nightsim.mesh import (build_mesh, complete_background,
                           complete_foreground, delete_uncertain_faces,
                           expand_uncertain_region, to_scene_mesh,
                           watertight_audit)
from nightsim.meshio import write_obj, write_ply
from nightsim.synth import synth_scene

bundle = synth_scene("car-on-road", size=64, seed=0)
cfg = PipelineConfig()

sheet = build_mesh(bundle.depth, bundle.cam, cfg, rgb=bundle.rgb)
print("lattice %dx%d, %d faces" % (sheet.cols, sheet.rows, sheet.face_count()))

# Faces touching flagged pixels straddle real depth jumps; delete them.
uncertain = flag_uncertain_regions(bundle.depth, bundle.semantic, cfg)
cut = delete_uncertain_faces(sheet, uncertain)
print("after deletion: %d faces, %d unmatched interior edges"
      % (cut.face_count(), watertight_audit(cut)))

# Grow each flagged patch to cover the whole touching object, then repair:
# background regions by row interpolation, foreground objects by BFS.
regions = expand_uncertain_region(uncertain, bundle.semantic, cfg)
repaired = complete_background(cut, regions)
for region in regions:
    if region.kind == "foreground":
        repaired = complete_foreground(repaired, region, bundle.semantic)
print("after repair: %d faces, %d unmatched interior edges"
      % (repaired.face_count(), watertight_audit(repaired)))

out = os.path.dirname(os.path.abspath(__file__))
scene = to_scene_mesh(repaired)
write_obj(scene, os.path.join(out, "repaired.obj"),
          lattice_shape=(repaired.rows, repaired.cols))
write_ply(scene, os.path.join(out, "repaired.ply"))
print("wrote repaired.obj / repaired.ply")
