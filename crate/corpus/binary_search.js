function binarySearch(arr, target) {
  let lo = 0;
  let hi = arr.length - 1;
  while (lo <= hi) {
    let mid = Math.floor((lo + hi) / 2);
    if (arr[mid] === target) {
      return mid;
    }
    if (arr[mid] < target) {
      lo = mid + 1;
    } else {
      hi = mid - 1;
    }
  }
  return -1;
}
let data = [2, 5, 8, 12, 16, 23, 38, 56, 72, 91];
let found = binarySearch(data, 23);
let missing = binarySearch(data, 7);
