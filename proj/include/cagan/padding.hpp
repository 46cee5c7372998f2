#pragma once

#include "cagan/datamodel.hpp"

namespace cagan {

// Where the original image sits inside its padded canvas.
struct PadRecord {
  int top = 0;
  int left = 0;
  int height = 0;  // original size
  int width = 0;

  bool operator==(const PadRecord&) const = default;
};

// Offsets that center a height x width source in a target canvas; odd
// remainders go to the bottom/right. Throws PadError if the target is smaller.
PadRecord centered_pad(int height, int width, int target_height, int target_width);

// Pads an image with -1 (black). Returns the padded image; writes the record.
ImageTensor zero_pad(const ImageTensor& image, int target_height, int target_width, PadRecord* record = nullptr);

// Pads masks with pure background (background channel 1, others 0).
MaskSet zero_pad(const MaskSet& masks, int target_height, int target_width, PadRecord* record = nullptr);

// Exact inverse of zero_pad.
ImageTensor crop(const ImageTensor& padded, const PadRecord& record);
MaskSet crop(const MaskSet& padded, const PadRecord& record);

// Composes two paddings: `inner` was applied first, then `outer`.
PadRecord compose(const PadRecord& inner, const PadRecord& outer);

}  // namespace cagan
