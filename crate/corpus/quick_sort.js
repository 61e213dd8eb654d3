function quickSort(arr) {
  if (arr.length <= 1) {
    return arr;
  }
  let pivot = arr[0];
  let left = [];
  let right = [];
  for (let i = 1; i < arr.length; i++) {
    if (arr[i] < pivot) {
      left[left.length] = arr[i];
    } else {
      right[right.length] = arr[i];
    }
  }
  let sortedLeft = quickSort(left);
  let sortedRight = quickSort(right);
  let out = [];
  for (let j = 0; j < sortedLeft.length; j++) {
    out[out.length] = sortedLeft[j];
  }
  out[out.length] = pivot;
  for (let k = 0; k < sortedRight.length; k++) {
    out[out.length] = sortedRight[k];
  }
  return out;
}
let sorted = quickSort([5, 3, 8, 1, 9, 2, 7]);
