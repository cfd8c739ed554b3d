import pytest

import zonesim as z
from zonesim.buildingfile import BuildingFileError

MINIMAL = """
name = "shed"

[materials.board]
conductivity = 0.2
density = 800
specific_heat = 1200

[assemblies.panel]
layers = [
    { material = "board", thickness = 0.02 },
    { air_gap = 0.05 },
    { resistance = 0.5 },
    { material = "fibre_cement", thickness = 0.007 },
]

[zones.inside]
air_volume = 12.0
internal_gains = [0.0, 50.0, 0.0]

[zones.store]
air_volume = 4.0

[[surfaces]]
name = "front"
assembly = "panel"
zone = "inside"
area = 6.0
azimuth = 180.0
solar_absorptance = 0.5

[[surfaces]]
name = "partition"
assembly = "panel"
zone = "inside"
area = 3.0
outside = "zone:store"

[[surfaces]]
name = "slab"
assembly = "panel"
zone = "store"
area = 4.0
tilt = 180.0
outside = "ground"
ground_temperature = 22.5
"""


class TestParse:
    def test_minimal(self):
        b = z.loads_building(MINIMAL)
        assert b.name == "shed"
        assert b.zone_names == ["inside", "store"]
        panel = b.surfaces[0].assembly
        assert [layer.is_massless for layer in panel.layers] == [False, True, True, False]
        assert panel.layers[1].resistance == pytest.approx(0.05 / 0.10 / 9.26)
        assert b.zone("inside").internal_gains == (0.0, 50.0, 0.0)
        assert b.surfaces[1].outside == "zone" and b.surfaces[1].adjacent_zone == "store"
        assert b.surfaces[2].ground_temperature == 22.5
        assert b.surfaces[1].tilt == 90.0 and b.surfaces[1].solar_absorptance == 0.6
        assert z.validate_building(b) == []

    @pytest.mark.parametrize("old, new, fragment", [
        ("air_volume = 12.0", "air_volume = 12.0\ncolour = 1", "colour"),
        ('name = "front"', 'name = "front"\nwidth = 2', "width"),
        ("conductivity = 0.2", "conductivity = 0.2\nemissivity = 0.9", "emissivity"),
        ('{ resistance = 0.5 }', '{ resistance = 0.5, mass = 1 }', "layer"),
        ('name = "shed"', 'name = "shed"\nversion = 2', "version"),
    ])
    def test_rejects_unknown_keys(self, old, new, fragment):
        with pytest.raises(BuildingFileError, match=fragment):
            z.loads_building(MINIMAL.replace(old, new, 1))

    @pytest.mark.parametrize("old, new, fragment", [
        ('material = "board"', 'material = "cheese"', "unknown material"),
        ('assembly = "panel"', 'assembly = "wall"', "unknown assembly"),
        ('outside = "ground"', 'outside = "sky"', "outside"),
        ("area = 6.0", 'area = "big"', "number"),
        ("{ air_gap = 0.05 }", "{ air_gap = 0.0 }", "air gap"),
    ])
    def test_rejects_bad_values(self, old, new, fragment):
        with pytest.raises(BuildingFileError, match=fragment):
            z.loads_building(MINIMAL.replace(old, new, 1))

    def test_syntax_error(self):
        with pytest.raises(BuildingFileError):
            z.loads_building("[zones\n")

    def test_file_roundtrip(self, tmp_path):
        p = tmp_path / "shed.toml"
        p.write_text(MINIMAL)
        assert z.load_building(p) == z.loads_building(MINIMAL)

    def test_file_error_names_path(self, tmp_path):
        p = tmp_path / "bad.toml"
        p.write_text("[zones.a]\nvolume = 3\n")
        with pytest.raises(BuildingFileError, match="bad.toml"):
            z.load_building(p)


class TestBundled:
    def test_test_cell(self):
        b = z.bundled_building("test_cell")
        assert b.zone("cell").air_volume == pytest.approx(22.5)
        wall = b.surfaces[0].assembly
        assert [layer.thickness for layer in wall.layers] == [0.007, 0.06, 0.007]
        assert {s.outside for s in b.surfaces} == {"exterior", "ground"}

    def test_tropical_house(self):
        b = z.bundled_building("tropical_house")
        assert len(b.zones) == 5
        partitions = [s for s in b.surfaces if s.outside == "zone"]
        assert partitions and all(s.assembly.name == "fibreboard_partition" for s in partitions)
        roof = next(s for s in b.surfaces if s.name.endswith("_roof")).assembly
        assert [layer.is_massless for layer in roof.layers] == [False, True, False]

    def test_unknown(self):
        with pytest.raises(KeyError):
            z.bundled_building("castle")
