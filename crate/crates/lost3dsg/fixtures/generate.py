"""Regenerates vectors.txt and scenarios/*.json.

Run from this directory: python3 generate.py
"""

import json
import math
import random

import numpy as np

EPS = 0.5
CAM_HEIGHT = 1.2
TABLE_TOP = 0.75

# table name -> (center xy, camera yaw)
TABLES = {
    "A": ((2.5, 0.0), 0.0),
    "B": ((-2.5, 0.0), math.pi),
    "C": ((0.0, 2.5), math.pi / 2),
}
# (depth, lateral) offsets from the table center as seen from the camera
SLOTS = [(-0.25, -0.45), (-0.25, 0.0), (-0.25, 0.45), (0.25, -0.45), (0.25, 0.0), (0.25, 0.45), (0.02, -0.2)]

BIG = dict(fx=500.0, fy=500.0, cx=320.0, cy=240.0, width=640, height=480)
SMALL = dict(fx=50.0, fy=50.0, cx=32.0, cy=24.0, width=64, height=48)


def rotation(yaw):
    xc = (math.sin(yaw), -math.cos(yaw), 0.0)
    yc = (0.0, 0.0, -1.0)
    zc = (math.cos(yaw), math.sin(yaw), 0.0)
    return [[xc[i], yc[i], zc[i]] for i in range(3)]


def pose(table):
    r = rotation(TABLES[table][1])
    return {"rotation": [round(v, 12) + 0.0 for row in r for v in row], "translation": [0.0, 0.0, CAM_HEIGHT]}


def slot_xy(table, slot):
    (cx, cy), yaw = TABLES[table]
    d, l = SLOTS[slot]
    fwd = (math.cos(yaw), math.sin(yaw))
    left = (-math.sin(yaw), math.cos(yaw))
    return (cx + d * fwd[0] + l * left[0], cy + d * fwd[1] + l * left[1])


def obj_box(table, slot, size):
    x, y = slot_xy(table, slot)
    w, h = size
    return {"min": [r6(x - w / 2), r6(y - w / 2), TABLE_TOP], "max": [r6(x + w / 2), r6(y + w / 2), r6(TABLE_TOP + h)]}


def r6(v):
    return round(v, 6) + 0.0


def table_box(table):
    (cx, cy), yaw = TABLES[table]
    hx, hy = (0.5, 0.7) if abs(math.cos(yaw)) > 0.5 else (0.7, 0.5)
    return {"min": [r6(cx - hx), r6(cy - hy), 0.0], "max": [r6(cx + hx), r6(cy + hy), TABLE_TOP]}


def centroid(b):
    return [(lo + hi) / 2 for lo, hi in zip(b["min"], b["max"])]


def jitter(box, rng):
    d = [rng.uniform(-0.01, 0.01) for _ in range(3)]
    return {"min": [r6(v + e) for v, e in zip(box["min"], d)], "max": [r6(v + e) for v, e in zip(box["max"], d)]}


def render_masks(boxes, table, k):
    """Ray casts the boxes; returns per-box masks and one shared depth map."""
    r = np.array(rotation(TABLES[table][1]))
    origin = np.array([0.0, 0.0, CAM_HEIGHT])
    w, h = k["width"], k["height"]
    depth = [0.0] * (w * h)
    owner = [-1] * (w * h)
    for v in range(h):
        for u in range(w):
            dc = np.array([(u - k["cx"]) / k["fx"], (v - k["cy"]) / k["fy"], 1.0])
            dw = r @ dc
            best = None
            for i, b in enumerate(boxes):
                lo, hi = np.array(b["min"]), np.array(b["max"])
                t0, t1 = 0.0, math.inf
                for a in range(3):
                    if abs(dw[a]) < 1e-12:
                        if origin[a] < lo[a] or origin[a] > hi[a]:
                            t0 = math.inf
                        continue
                    ta, tb = (lo[a] - origin[a]) / dw[a], (hi[a] - origin[a]) / dw[a]
                    t0, t1 = max(t0, min(ta, tb)), min(t1, max(ta, tb))
                if t0 <= t1 and t0 > 0 and (best is None or t0 < best[0]):
                    best = (t0, i)
            if best is not None:
                depth[v * w + u] = r6(best[0])
                owner[v * w + u] = best[1]
    masks = [[1 if o == i else 0 for o in owner] for i in range(len(boxes))]
    return masks, depth


def fit100(text):
    assert len(text) >= 100, (len(text), text)
    return text[:100].rstrip(" ,") .ljust(100, ".")


class Sim:
    """World state plus frame log; derives ground-truth events."""

    def __init__(self, name, objects, seed):
        self.name = name
        self.objects = objects  # key -> dict(label, color, material, description, size)
        self.where = {}  # key -> (table, slot)
        self.frames = []  # (table, exploration, detections)
        self.events = []
        self.pending = []  # (kind, key, old_box, new_box, after_frame)
        self.rng = random.Random(seed)

    def box(self, key):
        t, s = self.where[key]
        return obj_box(t, s, self.objects[key]["size"])

    def place(self, key, table, slot):
        for k, loc in self.where.items():
            assert loc != (table, slot), (key, k, table, slot)
        self.where[key] = (table, slot)

    def move(self, key, table, slot):
        self.rearrange({key: (table, slot)})

    def rearrange(self, targets):
        """Moves several objects at once, e.g. a swap."""
        old = {k: self.box(k) for k in targets}
        for k in targets:
            del self.where[k]
        for k, (table, slot) in targets.items():
            self.place(k, table, slot)
            self.pending.append(("moved", k, old[k], self.box(k), len(self.frames)))

    def remove(self, key):
        old = self.box(key)
        old_table = self.where.pop(key)[0]
        self.pending.append(("removed", key, old, old_table, len(self.frames)))

    def appear(self, key, table, slot):
        self.place(key, table, slot)
        self.pending.append(("appeared", key, None, self.box(key), len(self.frames)))

    def view(self, table, exploration=False, order=None, masked=False):
        keys = [k for k in self.objects if k in self.where and self.where[k][0] == table]
        if order:
            keys.sort(key=lambda k: order.index(k) if k in order else len(order))
        k = SMALL if masked else BIG
        dets = []
        if masked:
            boxes = [self.box(key) for key in keys]
            masks, depth = render_masks(boxes, table, k)
        for i, key in enumerate(keys):
            o = self.objects[key]
            d = {f: o[f] for f in ("label", "color", "material", "description")}
            if masked:
                assert sum(masks[i]) > 0, key
                d["mask"] = masks[i]
                d["depth"] = depth
            else:
                d["bbox3d"] = jitter(self.box(key), self.rng)
            dets.append(d)
        self.frames.append({"exploration": exploration, "pose": pose(table), "intrinsics": k, "detections": dets, "_table": table})

    def first_view(self, table, after):
        for i in range(after, len(self.frames)):
            if self.frames[i]["_table"] == table:
                return i
        raise AssertionError(f"table {table} never viewed after frame {after}")

    def table_of(self, box):
        c = centroid(box)
        for t in TABLES:
            b = table_box(t)
            if b["min"][0] <= c[0] <= b["max"][0] and b["min"][1] <= c[1] <= b["max"][1]:
                return t
        raise AssertionError(box)

    def finish(self, exploration_keys):
        last_explore = max(i for i, f in enumerate(self.frames) if f["exploration"])
        events = []
        for key in exploration_keys:
            events.append({"kind": "exists", "object_key": key, "frame": last_explore, "expected_bbox": self.initial[key]})
        for kind, key, old, new, after in self.pending:
            if kind == "removed":
                f = self.first_view(new, after)
                events.append({"kind": "removed", "object_key": key, "frame": after, "deadline": f, "expected_bbox": old})
            elif kind == "appeared":
                f = self.first_view(self.table_of(new), after)
                events.append({"kind": "exists", "object_key": key, "frame": f, "expected_bbox": new})
            else:
                # by the time the new place is in view the old node is either
                # pruned or uncertain, so that view settles the event
                deadline = self.first_view(self.table_of(new), after)
                events.append({"kind": "moved", "object_key": key, "frame": after, "deadline": deadline, "expected_bbox": new})
        events.sort(key=lambda e: (e["frame"], e.get("deadline", e["frame"])))
        # a later move of the same object must not start before the earlier one is scored
        last = {}
        for e in events:
            if e["kind"] == "moved":
                prev = last.get(e["object_key"])
                assert prev is None or prev < e["frame"], e
                last[e["object_key"]] = e["deadline"]
        for f in self.frames:
            del f["_table"]
        doc = {
            "name": self.name,
            "rooms": [{"label": "laboratory", "polygon": [[-4.0, -4.0], [4.0, -4.0], [4.0, 4.0], [-4.0, 4.0]]}],
            "supports": [
                {"label": f"table {t.lower()}", "color": "beige", "material": "laminate", "description": f"work table {t}", "bbox": table_box(t)}
                for t in TABLES
            ],
            "objects": [
                {"key": k, **{f: o[f] for f in ("label", "color", "material", "description")}} for k, o in self.objects.items()
            ],
            "frames": self.frames,
            "ground_truth": events,
        }
        return doc

    def snapshot(self):
        self.initial = {k: self.box(k) for k in self.where}


def obj(label, color, material, description, size):
    return dict(label=label, color=color, material=material, description=description, size=size)


def level1():
    objects = {
        "hammer": obj("hammer", "red", "wood and steel", "claw hammer with a red wooden handle and a steel head", (0.12, 0.06)),
        "mug": obj("mug", "white", "ceramic", "white ceramic coffee mug with a small chip on the rim", (0.1, 0.12)),
        "tape": obj("tape roll", "silver", "plastic", "roll of silver duct tape wound on a plastic core", (0.11, 0.05)),
    }
    s = Sim("level-1", objects, seed=1)
    s.place("hammer", "A", 0)
    s.place("mug", "A", 1)
    s.place("tape", "A", 2)
    s.snapshot()
    s.view("A", exploration=True, masked=True)
    s.view("A", exploration=True)
    s.move("hammer", "B", 0)
    s.view("B")
    s.view("A")
    s.move("mug", "C", 1)
    s.view("C")
    s.view("A")
    s.move("tape", "B", 2)
    s.view("B")
    s.view("A")
    s.remove("hammer")
    s.view("B")
    s.remove("mug")
    s.view("C")
    s.remove("tape")
    s.view("B")
    return s.finish(["hammer", "mug", "tape"])


L2_OBJECTS = [
    # table B, explored first
    ("b_mug", "B", 0, "ceramic coffee mug", "cornflower blue", "glazed stoneware ceramic",
     "tall blue stoneware mug with a speckled glaze finish, a chunky loop handle and a faint coffee ring inside it", (0.1, 0.12)),
    ("b_laptop", "B", 1, "portable laptop computer", "dark slate gray", "anodized aluminum alloy",
     "thin slate gray laptop with its lid half open, a backlit keyboard and a sticker near the trackpad corner", (0.3, 0.03)),
    ("b_plant", "B", 2, "potted succulent plant", "medium sea green", "terracotta clay pottery",
     "small succulent with thick fleshy leaves growing in an unglazed terracotta pot with a drainage saucer", (0.12, 0.18)),
    ("b_lamp", "B", 3, "adjustable desk lamp", "black matte finish", "powder coated steel sheet",
     "articulated desk lamp with a conical shade, two spring loaded arms and a weighted round iron base plate", (0.15, 0.4)),
    ("b_stapler", "B", 4, "heavy duty office stapler", "dark red crimson", "die cast zinc metal",
     "long reach stapler with a crimson top cover, rubber feet and a spring loaded staple magazine inside it", (0.06, 0.07)),
    ("b_headphones", "B", 5, "wireless over ear headphones", "charcoal black gray", "molded polycarbonate plastic",
     "folded over ear headphones with cushioned leatherette pads and a padded adjustable headband on top of it", (0.18, 0.08)),
    ("b_calculator", "B", 6, "scientific pocket calculator", "dark slate blue", "injection molded plastic",
     "graphing calculator with a monochrome screen, rubber buttons and a sliding protective front cover on", (0.09, 0.02)),
    # table C
    ("c_book", "C", 0, "hardcover reference book", "dark olive green", "bound paper and cloth",
     "thick reference book with an olive cloth spine, gold lettering and several colored bookmarks sticking out", (0.2, 0.05)),
    ("c_scissors", "C", 1, "stainless steel scissors", "orange and silver", "stainless steel and plastic",
     "pair of office scissors with orange rubber handles and long pointed blades resting in a closed position", (0.08, 0.02)),
    ("c_bottle", "C", 2, "reusable water bottle", "light steel blue", "brushed stainless steel",
     "insulated water bottle with a screw top lid, a carrying loop and a few dents along the lower half of it", (0.08, 0.25)),
    ("c_tape", "C", 3, "transparent tape dispenser", "smoke gray tinted", "weighted acrylic plastic",
     "weighted desktop tape dispenser holding a roll of clear adhesive tape with a serrated metal cutting edge", (0.07, 0.06)),
    ("c_radio", "C", 4, "portable transistor radio", "antique white cream", "vintage bakelite plastic",
     "retro transistor radio with a chrome telescopic antenna, two rotary dials and a perforated speaker grille", (0.2, 0.12)),
    ("c_camera", "C", 5, "mirrorless digital camera", "black and silver", "magnesium alloy and rubber",
     "compact mirrorless camera with a short zoom lens attached, a textured hand grip and a neck strap coiled", (0.12, 0.08)),
    ("c_candle", "C", 6, "scented pillar candle", "lavender purple", "paraffin and soy wax blend",
     "unlit lavender pillar candle with a blackened cotton wick and a slight drip of wax running down one side", (0.08, 0.15)),
    # table A
    ("a_mug", "A", 0, "ceramic coffee mug", "medium violet red", "glazed stoneware ceramic",
     "squat magenta mug decorated with a printed mountain landscape and a gold rim, the handle shaped like a D", (0.1, 0.12)),
    ("a_keyboard", "A", 1, "mechanical computer keyboard", "light goldenrod yellow", "molded abs plastic keycaps",
     "compact mechanical keyboard with cream keycaps, a coiled braided cable and a small rotary volume knob on", (0.3, 0.04)),
    ("a_screwdriver", "A", 2, "precision screwdriver set", "crimson red and black", "chrome vanadium steel",
     "zippered case holding a precision screwdriver handle and two rows of interchangeable magnetic driver bits", (0.14, 0.04)),
    ("a_notebook", "A", 3, "spiral bound notebook", "pale goldenrod yellow", "recycled paper and cardboard",
     "spiral notebook with a kraft cardboard cover, dog eared pages and handwritten notes visible on the top", (0.2, 0.02)),
    ("a_glasses", "A", 4, "reading eyeglasses pair", "tortoiseshell brown", "cellulose acetate frame",
     "folded reading glasses with round tortoiseshell frames and thin metal temples lying on a microfiber cloth", (0.14, 0.04)),
    ("a_phone", "A", 5, "smartphone in a case", "midnight blue navy", "silicone rubber protective case",
     "smartphone lying face down in a navy silicone case with a camera bump cutout and a cracked corner guard", (0.08, 0.02)),
    ("a_watch", "A", 6, "analog wrist watch", "rose gold metallic", "stainless steel and leather",
     "analog wrist watch with a rose gold case, a white dial with roman numerals and a brown leather strap too", (0.05, 0.02)),
]


def level2():
    objects, places = {}, {}
    for key, table, slot, label, color, material, desc, size in L2_OBJECTS:
        objects[key] = obj(label, color, material, fit100(desc), size)
        places[key] = (table, slot)
    s = Sim("level-2", objects, seed=2)
    for k, (t, sl) in places.items():
        s.place(k, t, sl)
    s.snapshot()
    s.view("B", exploration=True)
    s.view("C", exploration=True)
    s.view("A", exploration=True)
    s.view("A")
    # off screen: the blue mug is taken away and the red one put in its place
    s.remove("b_mug")
    s.move("a_mug", "B", 0)
    s.remove("c_scissors")
    s.remove("c_candle")
    s.view("B")
    s.view("A")
    s.view("C")
    s.view("B")
    s.view("C")
    return s.finish(list(places))


L3_OBJECTS = {
    "mug_red": obj("mug", "red", "ceramic", "red ceramic mug with a white interior and a thin curved handle", (0.1, 0.12)),
    "mug_blue": obj("mug", "blue", "ceramic", "blue ceramic mug with a white inside and a chunky square handle", (0.1, 0.12)),
    "mug_yellow": obj("mug", "yellow", "ceramic", "squat yellow espresso cup on a matching saucer", (0.08, 0.07)),
    "pen_a": obj("pen", "black", "plastic", "ballpoint pen with a metal pocket clip", (0.02, 0.02)),
    "pen_b": obj("pen", "black", "plastic", "chunky gel marker, rubber grip, cap on", (0.02, 0.02)),
    "book": obj("book", "green", "paper", "hardcover novel with a torn green dust jacket", (0.2, 0.04)),
    "scissors": obj("scissors", "orange", "steel", "orange handled scissors with long blades", (0.08, 0.02)),
    "stapler": obj("stapler", "gray", "metal", "gray desktop stapler with a rubber base", (0.05, 0.07)),
    "bottle": obj("water bottle", "blue", "plastic", "blue plastic water bottle with a flip straw lid", (0.08, 0.22)),
    "bottle_red": obj("water bottle", "red", "plastic", "red plastic water bottle with a flip straw lid", (0.08, 0.22)),
}


def level3():
    s = Sim("level-3", L3_OBJECTS, seed=3)
    s.place("mug_red", "A", 0)
    s.place("pen_a", "A", 1)
    s.place("mug_blue", "A", 2)
    s.place("pen_b", "B", 0)
    s.place("book", "B", 1)
    s.place("scissors", "B", 2)
    s.place("stapler", "C", 0)
    s.place("bottle", "C", 1)
    s.snapshot()
    initial = list(s.where)
    s.view("A", exploration=True)
    s.view("B", exploration=True)
    s.view("C", exploration=True)
    # a different mug stands where the red one was
    s.remove("mug_red")
    s.appear("mug_yellow", "A", 0)
    s.view("A")
    # the two remaining mugs trade places; the blue one is seen first
    s.rearrange({"mug_yellow": ("A", 2), "mug_blue": ("A", 0)})
    s.view("A", order=["mug_blue", "mug_yellow"])
    # the pens trade tables
    s.rearrange({"pen_a": ("B", 0), "pen_b": ("A", 1)})
    s.view("A")
    s.view("B")
    s.move("book", "C", 2)
    s.move("scissors", "A", 3)
    s.view("C")
    s.view("A")
    s.view("B")
    # the blue bottle is swapped for a red one of the same make
    s.move("stapler", "B", 1)
    s.remove("bottle")
    s.appear("bottle_red", "C", 1)
    s.view("C")
    s.view("B")
    s.move("mug_yellow", "B", 2)
    s.move("mug_blue", "C", 0)
    s.view("B")
    s.view("C")
    s.view("A")
    s.remove("pen_b")
    s.move("scissors", "A", 5)
    s.view("A")
    s.move("book", "A", 4)
    s.view("C")
    s.view("A")
    s.move("bottle_red", "C", 3)
    s.move("stapler", "B", 4)
    s.move("mug_blue", "C", 2)
    s.view("B")
    s.view("C")
    s.view("A")
    return s.finish(initial)


def vectors():
    clusters = {
        "drink": "mug cup coffee tea bottle water flask tumbler glass",
        "write": "pen pencil marker ballpoint gel notebook paper book novel reference journal spiral",
        "tool": "hammer screwdriver wrench pliers scissors stapler tape dispenser roll precision",
        "electronic": "laptop computer keyboard headphones calculator radio camera smartphone phone transistor digital wireless",
        "wood": "wood wooden oak hardwood timber",
        "metal": "metal steel stainless aluminum alloy zinc chrome vanadium brushed anodized magnesium die cast",
        "ceramic": "ceramic porcelain stoneware glazed terracotta clay pottery",
        "plastic": "plastic polycarbonate polypropylene acrylic abs molded injection bakelite silicone rubber",
        "fabric": "fabric cotton cloth leather acetate cellulose",
        "decor": "plant succulent potted candle pillar scented lamp",
        "wear": "watch wrist eyeglasses glasses reading analog",
    }
    singles = "table laminate laboratory pot case over ear bound powder coated sheet paraffin soy wax blend frame keycaps protective recycled cardboard and portable adjustable desk office heavy duty hardcover transparent scientific pocket pair reusable mechanical mirrorless set spiral".split()
    rng = np.random.default_rng(7)
    dim = 32
    out = {}
    centers = {c: rng.normal(size=dim) for c in clusters}
    for c, words in clusters.items():
        for w in words.split():
            if w not in out:
                v = 0.75 * centers[c] / np.linalg.norm(centers[c]) + 0.66 * rng.normal(size=dim) / math.sqrt(dim)
                out[w] = v
    for w in singles:
        if w not in out:
            out[w] = rng.normal(size=dim)
    lines = [f"{len(out)} {dim}"]
    for w, v in out.items():
        lines.append(w + " " + " ".join(f"{x:.5f}" for x in v))
    return "\n".join(lines) + "\n"


def dump(doc, path):
    with open(path, "w") as f:
        json.dump(doc, f, separators=(",", ":"))
        f.write("\n")


if __name__ == "__main__":
    with open("vectors.txt", "w") as f:
        f.write(vectors())
    dump(level1(), "scenarios/level1.json")
    dump(level2(), "scenarios/level2.json")
    dump(level3(), "scenarios/level3.json")
