function merge(a, b) {
  let out = [];
  let i = 0;
  let j = 0;
  while (i < a.length && j < b.length) {
    if (a[i] <= b[j]) {
      out[out.length] = a[i];
      i++;
    } else {
      out[out.length] = b[j];
      j++;
    }
  }
  while (i < a.length) {
    out[out.length] = a[i];
    i++;
  }
  while (j < b.length) {
    out[out.length] = b[j];
    j++;
  }
  return out;
}
function mergeSort(arr) {
  if (arr.length <= 1) {
    return arr;
  }
  let mid = Math.floor(arr.length / 2);
  let left = [];
  let right = [];
  for (let i = 0; i < arr.length; i++) {
    if (i < mid) {
      left[left.length] = arr[i];
    } else {
      right[right.length] = arr[i];
    }
  }
  return merge(mergeSort(left), mergeSort(right));
}
let sorted = mergeSort([38, 27, 43, 3, 9, 82, 10]);
