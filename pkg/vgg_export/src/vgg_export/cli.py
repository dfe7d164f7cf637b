"""CLI wrapper: export-vgg --source <id-or-path> --out <path>."""

from __future__ import annotations

import argparse
import sys

from .export import export_vgg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="export-vgg",
        description="Export VGG-16 conv1_1..conv3_3 weights to a GSTW trunk file",
    )
    parser.add_argument("--source", required=True,
                        help="'torchvision' or a path to a saved state_dict (.pth)")
    parser.add_argument("--out", required=True, help="output .gstw path")
    parser.add_argument("--manifest", default="",
                        help="where to write the JSON manifest (default: <out>.manifest.json)")
    args = parser.parse_args(argv)
    try:
        manifest = export_vgg(args.source, args.out)
    except (OSError, KeyError, ValueError) as e:
        print(f"export-vgg: {e}", file=sys.stderr)
        return 1
    for name, shape in manifest.shapes.items():
        print(f"{name}: kernel {tuple(shape)}")
    print(f"sha256: {manifest.sha256}")
    manifest_path = args.manifest or f"{args.out}.manifest.json"
    with open(manifest_path, "w") as f:
        f.write(manifest.to_json() + "\n")
    print(f"wrote {args.out} and {manifest_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
